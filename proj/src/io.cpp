#include "fbc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fbc {

LoadedChannel parse_channel_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_parameter, std::string("channel file is not valid JSON: ") + e.what());
  }
  if (!j.contains("W") || !j["W"].is_array() || j["W"].empty())
    fail(errc::bad_parameter, "channel file must contain a non-empty matrix under \"W\"");
  const auto& rows = j["W"];
  std::size_t cols = 0;
  for (const auto& row : rows) {
    if (!row.is_array()) fail(errc::bad_parameter, "\"W\" must be an array of rows");
    if (cols == 0) cols = row.size();
    if (row.size() != cols) fail(errc::bad_parameter, "\"W\" rows have unequal lengths");
  }
  if (cols == 0) fail(errc::empty_alphabet, "channel matrix has no columns");
  Matrix<double> m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number()) fail(errc::bad_parameter, "matrix entries must be numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c].get<double>();
    }
  LoadedChannel lc;
  lc.channel = validate(m);
  if (j.contains("labels_x")) {
    for (const auto& s : j["labels_x"]) lc.labels_x.push_back(s.get<std::string>());
    if (lc.labels_x.size() != static_cast<std::size_t>(lc.channel.input_size()))
      fail(errc::bad_parameter, "labels_x length does not match the input alphabet");
  }
  if (j.contains("labels_y")) {
    std::vector<std::string> all;
    for (const auto& s : j["labels_y"]) all.push_back(s.get<std::string>());
    if (all.size() != cols) fail(errc::bad_parameter, "labels_y length does not match the output alphabet");
    for (Index k : lc.channel.kept_columns) lc.labels_y.push_back(all[static_cast<std::size_t>(k)]);
  }
  return lc;
}

LoadedChannel load_channel_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::bad_parameter, "cannot open channel file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_channel_json(ss.str());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string channel_hash(const Channel<double>& ch) {
  std::string blob = std::to_string(ch.input_size()) + "x" + std::to_string(ch.output_size()) + ":";
  for (Index x = 0; x < ch.input_size(); ++x)
    for (Index y = 0; y < ch.output_size(); ++y) blob += format_double(ch.w(x, y)) + ",";
  std::uint64_t h = fnv1a64(blob.data(), blob.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void escape_string(const std::string& s, std::string& out) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void dump_rec(const ordered_json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
  const std::string pad_in(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += pad_in;
        escape_string(it.key(), out);
        out += ": ";
        dump_rec(it.value(), out, indent, depth + 1);
        if (i + 1 < j.size()) out += ",";
        out += "\n";
      }
      out += pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalars_only = true;
      for (const auto& v : j)
        if (v.is_structured()) scalars_only = false;
      if (scalars_only) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          dump_rec(j[i], out, indent, depth + 1);
          if (i + 1 < j.size()) out += ", ";
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad_in;
        dump_rec(j[i], out, indent, depth + 1);
        if (i + 1 < j.size()) out += ",";
        out += "\n";
      }
      out += pad + "]";
      return;
    }
    case nlohmann::json::value_t::string:
      escape_string(j.get<std::string>(), out);
      return;
    case nlohmann::json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case nlohmann::json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(j.get<long long>());
      return;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(j.get<unsigned long long>());
      return;
    default:
      out += "null";
      return;
  }
}

ordered_json vec_json(const Vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

std::string dump_json(const ordered_json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += "\n";
  return out;
}

ordered_json to_json(const Channel<double>& ch) {
  ordered_json j;
  j["inputs"] = ch.input_size();
  j["outputs"] = ch.output_size();
  ordered_json rows = ordered_json::array();
  for (Index x = 0; x < ch.input_size(); ++x) {
    ordered_json row = ordered_json::array();
    for (Index y = 0; y < ch.output_size(); ++y) row.push_back(ch.w(x, y));
    rows.push_back(row);
  }
  j["W"] = rows;
  ordered_json kept = ordered_json::array();
  for (Index k : ch.kept_columns) kept.push_back(k);
  j["kept_columns"] = kept;
  j["hash"] = channel_hash(ch);
  return j;
}

ordered_json to_json(const Classification<double>& c) {
  ordered_json j;
  j["symmetric"] = c.symmetric;
  if (c.symmetric) {
    ordered_json parts = ordered_json::array();
    for (const auto& p : c.partition) {
      ordered_json part = ordered_json::array();
      for (Index y : p) part.push_back(y);
      parts.push_back(part);
    }
    j["partition"] = parts;
  }
  j["singular"] = c.singular;
  if (c.singular) {
    ordered_json d = ordered_json::array();
    for (double v : c.deltas) d.push_back(v);
    j["column_constants"] = d;
  }
  if (!c.per_class.empty()) {
    ordered_json pc = ordered_json::array();
    for (const auto& sc : c.per_class) {
      ordered_json e;
      e["delta"] = sc.delta;
      e["alpha"] = sc.alpha;
      e["nu"] = sc.nu;
      pc.push_back(e);
    }
    j["per_class"] = pc;
  }
  return j;
}

ordered_json to_json(const MomentProfile<double>& mp) {
  ordered_json j;
  j["capacity_nats"] = mp.capacity;
  j["caid"] = vec_json(mp.caid);
  j["v"] = mp.v;
  j["v_eps"] = mp.v_eps;
  j["v_reverse"] = mp.v_rev;
  j["u"] = mp.u;
  j["m3_x"] = vec_json(mp.m3_x);
  j["m3_avg"] = mp.m3_avg;
  j["m3_tilde"] = mp.m3_tilde;
  j["kappa"] = mp.kappa;
  return j;
}

ordered_json to_json(const SymmetricConverseConstants<double>& k) {
  ordered_json j;
  j["eps"] = k.eps;
  j["capacity_nats"] = k.capacity;
  j["v"] = k.v;
  j["m3"] = k.m3;
  j["k_ratio"] = k.k_ratio;
  j["K"] = k.K;
  j["n_o"] = k.n_o;
  return j;
}

ordered_json to_json(const CCConverseConstants<double>& k) {
  ordered_json j;
  j["eps"] = k.eps;
  j["capacity_nats"] = k.capacity;
  j["caid"] = vec_json(k.caid);
  j["v_eps"] = k.v_eps;
  j["delta"] = k.delta;
  j["delta_certification"] = k.net_verified ? "net-verified" : "proved";
  j["nu"] = k.nu;
  j["gamma"] = k.gamma;
  j["v_max"] = k.v_max;
  j["kappa"] = k.kappa;
  j["k_s1"] = k.k_s1;
  j["beta1"] = k.beta1;
  j["beta2"] = k.beta2;
  if (k.eps > 0.5) {
    j["a"] = k.a;
    j["a_rule"] = "2/(1-eps)+1";
    j["extra_log_term"] = k.extra_log_term;
  }
  j["quad_term"] = k.quad_term;
  j["K_total"] = k.K_total;
  j["n_o"] = k.n_o;
  j["n_tilde_o"] = k.n_tilde_o;
  j["net_resolution"] = k.net_resolution;
  j["net_ball_points"] = k.net_ball_points;
  return j;
}

ordered_json to_json(const ConverseReport<double>& r) {
  ordered_json j;
  j["n"] = r.n;
  j["eps"] = r.eps;
  j["bound_nats"] = r.bound_nats;
  j["regime"] = r.regime;
  j["valid_from"] = r.valid_from;
  j["trivial_bound_substituted"] = r.trivial;
  j["capacity_term"] = r.capacity_term;
  j["normal_term"] = r.normal_term;
  j["third_order_term"] = r.third_term;
  j["third_order_exact"] = r.third_order_exact;
  if (r.sym_constants) j["constants"] = to_json(*r.sym_constants);
  if (r.cc_constants) j["constants"] = to_json(*r.cc_constants);
  return j;
}

ordered_json to_json(const MinimaxReport<double>& r) {
  ordered_json j;
  j["n"] = r.n;
  j["eps"] = r.eps;
  j["rate"] = r.rate;
  j["tau"] = r.tau;
  j["w_sr"] = r.w_sr;
  j["tilted"] = r.tilted;
  j["log_beta"] = r.log_beta;
  j["beta"] = r.beta;
  j["rate_bound_nats"] = r.rate_bound_nats;
  j["strict_check"] = r.strict_check;
  j["enumerated"] = r.enumerated;
  return j;
}

ordered_json to_json(const AuditResult<double>& r) {
  ordered_json j;
  j["n"] = r.detail.n;
  j["rate"] = r.rate;
  j["ml_error"] = r.ml_error;
  j["lower_bound"] = r.lower_bound;
  j["cdf_term"] = r.detail.cdf_term;
  j["tilted_term"] = r.detail.tilted_term;
  j["pass"] = r.pass;
  return j;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ",";
    out += cells[i];
  }
  out += "\n";
  return out;
}

}  // namespace fbc
