#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fbc/io.hpp"

using namespace fbc;

namespace {

struct Options {
  std::string channel_file;
  std::string builtin_spec;
  double eps = 0.1;
  std::string n_spec;
  std::string rate_spec;
  std::string format = "json";
  std::uint64_t seed = 12345;
  std::uint64_t enum_budget = 10000000;
  int grid = 100;
  int trials = 100;
  bool optimize_rate = false;
  std::string out_path;
};

void add_common(CLI::App* cmd, Options& o, bool needs_n) {
  auto* src = cmd->add_option_group("channel source");
  src->add_option("--channel", o.channel_file, "channel JSON file");
  src->add_option("--builtin", o.builtin_spec, "builtin channel, e.g. bec:0.5, bsc:0.11, identity:4, asym_example");
  src->require_option(1);
  cmd->add_option("--eps", o.eps, "target error probability in (0,1)");
  if (needs_n) cmd->add_option("--n", o.n_spec, "blocklength or range A[:B[:STEP]]");
  cmd->add_option("--format", o.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", o.seed, "random seed for randomized audits");
  cmd->add_option("--enum-budget", o.enum_budget, "composition enumeration budget");
  cmd->add_option("--grid", o.grid, "simplex grid resolution for searches");
  cmd->add_option("--out", o.out_path, "write the report to a file instead of stdout");
}

Channel<double> resolve_channel(const Options& o, std::string& source_desc) {
  if (!o.channel_file.empty()) {
    source_desc = o.channel_file;
    return load_channel_json(o.channel_file).channel;
  }
  source_desc = o.builtin_spec;
  std::string name = o.builtin_spec;
  std::vector<double> params;
  auto colon = name.find(':');
  if (colon != std::string::npos) {
    std::string plist = name.substr(colon + 1);
    name = name.substr(0, colon);
    std::size_t pos = 0;
    while (pos < plist.size()) {
      auto comma = plist.find(',', pos);
      if (comma == std::string::npos) comma = plist.size();
      params.push_back(std::stod(plist.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  return builtin<double>(name, params);
}

std::vector<long> parse_n_range(const std::string& spec) {
  if (spec.empty()) fail(errc::bad_parameter, "--n is required for this subcommand");
  long a = 0, b = 0, step = 1;
  auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    a = b = std::stol(spec);
  } else {
    a = std::stol(spec.substr(0, c1));
    auto rest = spec.substr(c1 + 1);
    auto c2 = rest.find(':');
    if (c2 == std::string::npos) {
      b = std::stol(rest);
    } else {
      b = std::stol(rest.substr(0, c2));
      step = std::stol(rest.substr(c2 + 1));
    }
  }
  if (a < 1 || b < a || step < 1) fail(errc::bad_parameter, "invalid --n range");
  std::vector<long> out;
  for (long n = a; n <= b; n += step) out.push_back(n);
  return out;
}

std::vector<double> parse_rate_range(const std::string& spec) {
  std::vector<double> out;
  if (spec.empty()) return out;
  auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    out.push_back(std::stod(spec));
    return out;
  }
  double a = std::stod(spec.substr(0, c1));
  auto rest = spec.substr(c1 + 1);
  auto c2 = rest.find(':');
  double b, step;
  if (c2 == std::string::npos) {
    b = std::stod(rest);
    step = (b - a) / 19;
  } else {
    b = std::stod(rest.substr(0, c2));
    step = std::stod(rest.substr(c2 + 1));
  }
  if (step <= 0 || b < a) fail(errc::bad_parameter, "invalid --rate range");
  for (double r = a; r <= b + 1e-12; r += step) out.push_back(r);
  return out;
}

ordered_json config_json(const Options& o, const std::string& command) {
  ordered_json c;
  c["command"] = command;
  c["eps"] = o.eps;
  if (!o.n_spec.empty()) c["n"] = o.n_spec;
  if (!o.rate_spec.empty()) c["rate"] = o.rate_spec;
  c["format"] = o.format;
  c["seed"] = o.seed;
  c["enum_budget"] = o.enum_budget;
  c["grid"] = o.grid;
  if (o.optimize_rate) c["optimize_rate"] = true;
  return c;
}

ordered_json envelope(const Options& o, const std::string& command, const Channel<double>& ch,
                      const std::string& source) {
  ordered_json j;
  j["tool"] = "fbc";
  j["version"] = kVersion;
  j["config"] = config_json(o, command);
  ordered_json cj;
  cj["source"] = source;
  cj["hash"] = channel_hash(ch);
  cj["inputs"] = ch.input_size();
  cj["outputs"] = ch.output_size();
  j["channel"] = cj;
  return j;
}

void emit(const Options& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) fail(errc::bad_parameter, "cannot open output file: " + o.out_path);
    f << text;
  }
}

std::string csv_meta(const Options& o, const std::string& command, const Channel<double>& ch) {
  std::string s;
  s += "# tool=fbc version=" + std::string(kVersion) + " command=" + command + "\n";
  s += "# channel_hash=" + channel_hash(ch) + " eps=" + format_double(o.eps) +
       " seed=" + std::to_string(o.seed) + " enum_budget=" + std::to_string(o.enum_budget) +
       " grid=" + std::to_string(o.grid) + "\n";
  return s;
}

std::string flag(bool b) { return b ? "1" : "0"; }

int run_classify(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  auto cls = classify(ch);
  if (o.format == "csv") {
    std::string s = csv_meta(o, "classify", ch);
    s += csv_row({"symmetric", "singular", "partition", "column_constants"});
    std::string parts, consts;
    for (std::size_t i = 0; i < cls.partition.size(); ++i) {
      if (i) parts += ";";
      for (std::size_t k = 0; k < cls.partition[i].size(); ++k)
        parts += (k ? "|" : "") + std::to_string(cls.partition[i][k]);
    }
    for (std::size_t i = 0; i < cls.deltas.size(); ++i) consts += (i ? "|" : "") + format_double(cls.deltas[i]);
    s += csv_row({flag(cls.symmetric), flag(cls.singular), parts, consts});
    emit(o, s);
  } else {
    auto j = envelope(o, "classify", ch, src);
    j["classification"] = to_json(cls);
    emit(o, dump_json(j));
  }
  return 0;
}

int run_measures(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  auto mp = compute_profile(ch, o.eps);
  if (o.format == "csv") {
    std::string s = csv_meta(o, "measures", ch);
    s += csv_row({"capacity_nats", "v", "v_eps", "v_reverse", "u", "m3_avg", "m3_tilde", "kappa"});
    s += csv_row({format_double(mp.capacity), format_double(mp.v), format_double(mp.v_eps),
                  format_double(mp.v_rev), format_double(mp.u), format_double(mp.m3_avg),
                  format_double(mp.m3_tilde), format_double(mp.kappa)});
    emit(o, s);
  } else {
    auto j = envelope(o, "measures", ch, src);
    j["measures"] = to_json(mp);
    emit(o, dump_json(j));
  }
  return 0;
}

int run_approx(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  auto ns = parse_n_range(o.n_spec);
  std::vector<ConverseReport<double>> reports;
  for (long n : ns) reports.push_back(theorem_series(ch, o.eps, n));
  if (o.format == "csv") {
    std::string s = csv_meta(o, "approx", ch);
    s += csv_row({"n", "eps", "bound_nats", "capacity_term", "normal_term", "third_order_term",
                  "third_order_exact", "regime"});
    for (const auto& r : reports)
      s += csv_row({std::to_string(r.n), format_double(r.eps), format_double(r.bound_nats),
                    format_double(r.capacity_term), format_double(r.normal_term), format_double(r.third_term),
                    flag(r.third_order_exact), r.regime});
    emit(o, s);
  } else {
    auto j = envelope(o, "approx", ch, src);
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    j["results"] = arr;
    emit(o, dump_json(j));
  }
  return 0;
}

int run_converse(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  auto ns = parse_n_range(o.n_spec);
  auto cls = classify(ch);
  std::vector<ConverseReport<double>> reports;
  if (cls.symmetric && cls.singular) {
    auto k = symmetric_converse_constants(ch, o.eps);
    for (long n : ns) reports.push_back(symmetric_converse(ch, o.eps, n, &k));
  } else if (!cls.symmetric && cls.singular) {
    CCOptions<double> copt;
    copt.net_resolution = o.grid;
    copt.gamma_resolution = std::max(o.grid, 200);
    auto c = cc_converse_constants(ch, o.eps, copt);
    for (long n : ns) reports.push_back(cc_converse(ch, o.eps, n, &c));
  } else {
    fail(errc::not_applicable,
         "no finite-blocklength converse constant implemented for this classification (try `approx`)");
  }
  if (o.format == "csv") {
    std::string s = csv_meta(o, "converse", ch);
    s += csv_row({"n", "eps", "bound_nats", "capacity_term", "normal_term", "third_order_term", "regime",
                  "valid_from", "trivial"});
    for (const auto& r : reports)
      s += csv_row({std::to_string(r.n), format_double(r.eps), format_double(r.bound_nats),
                    format_double(r.capacity_term), format_double(r.normal_term), format_double(r.third_term),
                    r.regime, std::to_string(r.valid_from), flag(r.trivial)});
    emit(o, s);
  } else {
    auto j = envelope(o, "converse", ch, src);
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    j["results"] = arr;
    emit(o, dump_json(j));
  }
  return 0;
}

int run_minimax(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  auto ns = parse_n_range(o.n_spec);
  auto rates = parse_rate_range(o.rate_spec);
  std::optional<SymmetricConverseConstants<double>> k;
  if (rates.empty()) k = symmetric_converse_constants(ch, o.eps);
  std::vector<MinimaxReport<double>> reports;
  for (long n : ns) {
    if (o.optimize_rate) {
      reports.push_back(np_best(ch, o.eps, n, o.enum_budget));
    } else if (!rates.empty()) {
      reports.push_back(np_tau_beta(ch, o.eps, n, rates.front(), o.enum_budget));
    } else {
      double rate = k->capacity + std::sqrt(k->v / double(n)) * normal_quantile(o.eps) + k->K / double(n);
      reports.push_back(np_tau_beta(ch, o.eps, n, rate, o.enum_budget));
    }
  }
  if (o.format == "csv") {
    std::string s = csv_meta(o, "minimax", ch);
    s += csv_row({"n", "eps", "rate", "tau", "w_sr", "tilted", "log_beta", "rate_bound_nats", "strict_check"});
    for (const auto& r : reports)
      s += csv_row({std::to_string(r.n), format_double(r.eps), format_double(r.rate), format_double(r.tau),
                    format_double(r.w_sr), format_double(r.tilted), format_double(r.log_beta),
                    format_double(r.rate_bound_nats), flag(r.strict_check)});
    emit(o, s);
  } else {
    auto j = envelope(o, "minimax", ch, src);
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    j["results"] = arr;
    emit(o, dump_json(j));
  }
  return 0;
}

int run_verify(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  std::mt19937_64 rng(o.seed);
  std::vector<AuditResult<double>> audits;
  int failures = 0;
  for (int t = 0; t < o.trials; ++t) {
    long n = 2 + static_cast<long>(rng() % 5);
    int m = 1 + static_cast<int>(rng() % 6);
    std::vector<Index> base(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = static_cast<Index>(rng() % static_cast<std::uint64_t>(ch.input_size()));
    std::vector<std::vector<Index>> words;
    for (int j = 0; j < m; ++j) {
      auto w = base;
      std::shuffle(w.begin(), w.end(), rng);
      words.push_back(std::move(w));
    }
    auto audit = audit_lower_bound(ch, make_codebook(ch, std::move(words)), {}, {}, o.enum_budget);
    if (!audit.pass) ++failures;
    audits.push_back(std::move(audit));
  }
  if (o.format == "csv") {
    std::string s = csv_meta(o, "verify", ch);
    s += csv_row({"trial", "n", "rate", "ml_error", "lower_bound", "pass"});
    for (std::size_t t = 0; t < audits.size(); ++t)
      s += csv_row({std::to_string(t), std::to_string(audits[t].detail.n), format_double(audits[t].rate),
                    format_double(audits[t].ml_error), format_double(audits[t].lower_bound),
                    flag(audits[t].pass)});
    emit(o, s);
  } else {
    auto j = envelope(o, "verify", ch, src);
    ordered_json arr = ordered_json::array();
    for (const auto& a : audits) arr.push_back(to_json(a));
    j["audits"] = arr;
    j["trials"] = o.trials;
    j["failures"] = failures;
    emit(o, dump_json(j));
  }
  return failures == 0 ? 0 : 1;
}

int run_spexp(const Options& o) {
  std::string src;
  auto ch = resolve_channel(o, src);
  auto rates = parse_rate_range(o.rate_spec);
  if (rates.empty()) {
    auto probe = capacity(ch);
    for (int i = 0; i < 20; ++i) rates.push_back(probe.capacity * (0.1 + 0.9 * i / 19.0));
  }
  SpOptions<double> sopt;
  sopt.q_resolution = std::max(o.grid / 2, 10);
  std::vector<std::pair<double, double>> rows;
  for (double r : rates) rows.emplace_back(r, sp_exponent(ch, r, sopt));
  if (o.format == "csv") {
    std::string s = csv_meta(o, "spexp", ch);
    s += csv_row({"rate", "e_sp"});
    for (const auto& [r, e] : rows) s += csv_row({format_double(r), format_double(e)});
    emit(o, s);
  } else {
    auto j = envelope(o, "spexp", ch, src);
    ordered_json arr = ordered_json::array();
    for (const auto& [r, e] : rows) {
      ordered_json row;
      row["rate"] = r;
      row["e_sp"] = e;
      arr.push_back(row);
    }
    j["results"] = arr;
    emit(o, dump_json(j));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-blocklength converse bounds for discrete memoryless channels"};
  app.require_subcommand(1);

  Options o;
  auto* c_classify = app.add_subcommand("classify", "symmetry and singularity classification");
  add_common(c_classify, o, false);
  auto* c_measures = app.add_subcommand("measures", "capacity, dispersions, and moment profile");
  add_common(c_measures, o, false);
  auto* c_approx = app.add_subcommand("approx", "normal-approximation series over a blocklength range");
  add_common(c_approx, o, true);
  auto* c_converse = app.add_subcommand("converse", "finite-blocklength converse bound (auto-selected)");
  add_common(c_converse, o, true);
  auto* c_minimax = app.add_subcommand("minimax", "exact threshold-test bound for symmetric singular channels");
  add_common(c_minimax, o, true);
  c_minimax->add_option("--rate", o.rate_spec, "rate parameter (defaults to the proof rate)");
  c_minimax->add_flag("--optimize-rate", o.optimize_rate, "minimize the bound over the rate parameter");
  auto* c_verify = app.add_subcommand("verify", "randomized lower-bound audits against exact ML decoding");
  add_common(c_verify, o, false);
  c_verify->add_option("--trials", o.trials, "number of random codebooks");
  auto* c_spexp = app.add_subcommand("spexp", "sphere-packing exponent over a rate grid");
  add_common(c_spexp, o, false);
  c_spexp->add_option("--rate", o.rate_spec, "rate grid A[:B[:STEP]]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_classify->parsed()) return run_classify(o);
    if (c_measures->parsed()) return run_measures(o);
    if (c_approx->parsed()) return run_approx(o);
    if (c_converse->parsed()) return run_converse(o);
    if (c_minimax->parsed()) return run_minimax(o);
    if (c_verify->parsed()) return run_verify(o);
    if (c_spexp->parsed()) return run_spexp(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (category(e.code())) {
      case err_category::validation: return 2;
      case err_category::inapplicable: return 3;
      case err_category::budget: return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
