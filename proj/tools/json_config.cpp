#include "json_config.hpp"

#include <fstream>
#include <optional>

#include <json.hpp>

namespace slicereduce::cli {

using nlohmann::json;

namespace {

std::string scalar_text(const std::string &key, const json &v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ConfigError("config key \"" + key + "\" must hold a string, number or boolean");
}

// Value of --config in args[from..], in either "--config f" or "--config=f" form.
std::optional<std::string> config_path(const std::vector<std::string> &args, std::size_t from) {
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file name");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

bool given_on_command_line(const std::vector<std::string> &args, std::size_t from, const std::string &flag) {
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> expand_config(const CLI::App &sub, const std::vector<std::string> &args,
                                       std::size_t sub_pos) {
  const auto path = config_path(args, sub_pos + 1);
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot read config file " + *path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw ConfigError("config file " + *path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + *path + " must hold a JSON object");

  std::vector<std::string> injected;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string &key = it.key();
    if (key == "config") throw ConfigError("config files cannot include other config files");
    const std::string flag = "--" + key;
    const CLI::Option *opt = sub.get_option_no_throw(flag);
    const bool positional = opt == nullptr;
    if (positional) opt = sub.get_option_no_throw(key);
    if (opt == nullptr || (positional && !opt->get_lnames().empty())) {
      throw ConfigError("unknown config key \"" + key + "\" for " + sub.get_name());
    }
    if (!positional && given_on_command_line(args, sub_pos + 1, flag)) continue;
    if (it->is_null()) continue;

    if (opt->get_type_size() == 0) {
      if (!it->is_boolean()) throw ConfigError("config key \"" + key + "\" is a flag and needs true or false");
      if (it->get<bool>()) injected.push_back(flag);
      continue;
    }
    std::vector<std::string> values;
    if (it->is_array()) {
      for (const auto &v : *it) values.push_back(scalar_text(key, v));
    } else {
      values.push_back(scalar_text(key, *it));
    }
    for (const auto &v : values) {
      if (!positional) injected.push_back(flag);
      injected.push_back(v);
    }
  }

  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, args.end());
  return out;
}

}  // namespace slicereduce::cli
