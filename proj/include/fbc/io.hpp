#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "fbc/bounds.hpp"
#include "fbc/channel.hpp"
#include "fbc/measures.hpp"
#include "fbc/minimax.hpp"
#include "fbc/verify.hpp"

namespace fbc {

using ordered_json = nlohmann::ordered_json;

struct LoadedChannel {
  Channel<double> channel;
  std::vector<std::string> labels_x, labels_y;
};

// Channel file format: {"W": [[...], ...]} with optional labels.
LoadedChannel load_channel_json(const std::string& path);
LoadedChannel parse_channel_json(const std::string& text);

// Hex FNV-1a fingerprint of dimensions plus entries at full precision.
std::string channel_hash(const Channel<double>& ch);

// Renders a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

// Serializes with format_double applied to every float so identical configs
// give byte-identical output.
std::string dump_json(const ordered_json& j, int indent = 2);

ordered_json to_json(const Channel<double>& ch);
ordered_json to_json(const Classification<double>& c);
ordered_json to_json(const MomentProfile<double>& mp);
ordered_json to_json(const SymmetricConverseConstants<double>& k);
ordered_json to_json(const CCConverseConstants<double>& k);
ordered_json to_json(const ConverseReport<double>& r);
ordered_json to_json(const MinimaxReport<double>& r);
ordered_json to_json(const AuditResult<double>& r);

// CSV helpers: stable column order, same 17-digit rendering as JSON.
std::string csv_row(const std::vector<std::string>& cells);

}  // namespace fbc
