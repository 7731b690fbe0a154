#include "tcnseg/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t parse_size(const std::string& value, const std::string& key,
                       const std::string& source, std::size_t line_no) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError(source + ": line " + std::to_string(line_no) + ": key '" + key +
                      "' expects a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& value, const std::string& key, const std::string& source,
                  std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError(source + ": line " + std::to_string(line_no) + ": key '" + key +
                      "' expects a real number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& value, const std::string& key, const std::string& source,
                std::size_t line_no) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(source + ": line " + std::to_string(line_no) + ": key '" + key +
                    "' expects true or false, got '" + value + "'");
}

}  // namespace

const char* scheme_name(Scheme scheme) {
  return scheme == Scheme::kFuture ? "future" : "past";
}

TrainConfig parse_config(std::string_view text, const std::string& source) {
  TrainConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ": line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "embed_dim") {
      config.conv.embed_dim = parse_size(value, key, source, line_no);
    } else if (key == "filters") {
      config.conv.filters = parse_size(value, key, source, line_no);
    } else if (key == "hidden_layers") {
      config.conv.hidden_layers = parse_size(value, key, source, line_no);
    } else if (key == "kernel_size") {
      config.conv.kernel_size = parse_size(value, key, source, line_no);
    } else if (key == "dropout") {
      config.conv.dropout = parse_real(value, key, source, line_no);
      if (config.conv.dropout < 0.0 || config.conv.dropout >= 1.0) {
        throw ConfigError(source + ": line " + std::to_string(line_no) +
                          ": dropout must lie in [0, 1)");
      }
    } else if (key == "scheme") {
      if (value == "future") {
        config.conv.scheme = Scheme::kFuture;
      } else if (value == "past") {
        config.conv.scheme = Scheme::kPast;
      } else {
        throw ConfigError(source + ": line " + std::to_string(line_no) +
                          ": scheme must be 'future' or 'past', got '" + value + "'");
      }
    } else if (key == "lr") {
      config.lr = parse_real(value, key, source, line_no);
      if (config.lr <= 0.0) {
        throw ConfigError(source + ": line " + std::to_string(line_no) +
                          ": lr must be positive");
      }
    } else if (key == "epochs") {
      config.epochs = parse_size(value, key, source, line_no);
    } else if (key == "batch_size") {
      config.batch_size = parse_size(value, key, source, line_no);
      if (config.batch_size == 0) {
        throw ConfigError(source + ": line " + std::to_string(line_no) +
                          ": batch_size must be >= 1");
      }
    } else if (key == "seed") {
      config.seed = parse_size(value, key, source, line_no);
    } else if (key == "patience") {
      config.patience = parse_size(value, key, source, line_no);
    } else if (key == "dev_holdout") {
      config.dev_holdout = parse_size(value, key, source, line_no);
    } else if (key == "freeze_embeddings") {
      config.freeze_embeddings = parse_bool(value, key, source, line_no);
    } else if (key == "sort_by_length") {
      config.sort_by_length = parse_bool(value, key, source, line_no);
    } else if (key == "train") {
      config.train_path = value;
    } else if (key == "dev") {
      config.dev_path = value;
    } else if (key == "embeddings") {
      config.embeddings_path = value;
    } else if (key == "checkpoint_dir") {
      config.checkpoint_dir = value;
    } else {
      throw ConfigError(source + ": line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
  }
  return config;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string serialize_config(const TrainConfig& c) {
  char real[64];
  std::ostringstream out;
  out << "embed_dim = " << c.conv.embed_dim << "\n";
  out << "filters = " << c.conv.filters << "\n";
  out << "hidden_layers = " << c.conv.hidden_layers << "\n";
  out << "kernel_size = " << c.conv.kernel_size << "\n";
  std::snprintf(real, sizeof(real), "%.17g", c.conv.dropout);
  out << "dropout = " << real << "\n";
  out << "scheme = " << scheme_name(c.conv.scheme) << "\n";
  std::snprintf(real, sizeof(real), "%.17g", c.lr);
  out << "lr = " << real << "\n";
  out << "epochs = " << c.epochs << "\n";
  out << "batch_size = " << c.batch_size << "\n";
  out << "seed = " << c.seed << "\n";
  out << "patience = " << c.patience << "\n";
  out << "dev_holdout = " << c.dev_holdout << "\n";
  out << "freeze_embeddings = " << (c.freeze_embeddings ? "true" : "false") << "\n";
  out << "sort_by_length = " << (c.sort_by_length ? "true" : "false") << "\n";
  out << "train = " << c.train_path << "\n";
  out << "dev = " << c.dev_path << "\n";
  out << "embeddings = " << c.embeddings_path << "\n";
  out << "checkpoint_dir = " << c.checkpoint_dir << "\n";
  return out.str();
}

}  // namespace tcnseg
