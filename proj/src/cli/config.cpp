// SPDX-License-Identifier: Apache-2.0

#include "tvae/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tvae/errors.hpp"

namespace tvae {

std::string to_string(Task t) {
  switch (t) {
    case Task::Train: return "train";
    case Task::Denoise: return "denoise";
    case Task::Inpaint: return "inpaint";
    case Task::BarsTest: return "bars-test";
    case Task::Eval: return "eval";
  }
  return "train";
}

Task task_from_string(const std::string& s) {
  for (Task t : {Task::Train, Task::Denoise, Task::Inpaint, Task::BarsTest, Task::Eval})
    if (to_string(t) == s) return t;
  throw InvalidInput("unknown task '" + s + "' (expected train, denoise, inpaint, bars-test or eval)");
}

PatchTaskConfig RunConfig::patch_task() const {
  PatchTaskConfig p;
  p.model = model;
  p.train = train;
  p.train.seed = seed;
  p.train.workers = workers;
  p.patch_size = patch_size;
  p.stride = stride;
  p.mean_subtract = mean_subtract;
  p.psnr_every = psnr_every;
  return p;
}

BarsExperimentConfig RunConfig::bars_experiment() const {
  BarsExperimentConfig b;
  b.side = bars_side;
  b.num_points = bars_num_points;
  b.gen_sigma2 = bars_sigma2;
  b.gen_pi = bars_pi;
  b.correlated = bars_correlated;
  b.runs = bars_runs;
  b.model = model;
  b.train = train;
  b.train.workers = workers;
  return b;
}

RunConfig default_config(Task task) {
  RunConfig c;
  c.task = task;
  if (task == Task::BarsTest) {
    const auto b = default_bars_experiment();
    c.model = b.model;
    c.train = b.train;
  }
  return c;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && s[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc{} || ptr != last)
    throw ParseError(where + ": invalid " + (std::is_floating_point_v<T> ? "number" : "integer") + " '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParseError(where + ": invalid boolean '" + s + "' (expected true or false)");
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& value, const std::string& where)> set;
};

// Accessor: generic lambda returning a reference to the member for const and mutable configs.
template <typename Acc>
Field number(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key),
          [acc](const RunConfig& c) {
            const auto v = acc(c);
            if constexpr (std::is_floating_point_v<decltype(v)>)
              return format_double(v);
            else
              return std::to_string(v);
          },
          [acc](RunConfig& c, const std::string& s, const std::string& where) {
            using T = std::remove_cvref_t<decltype(acc(c))>;
            if constexpr (std::is_signed_v<T> || std::is_floating_point_v<T>) {
              acc(c) = parse_number<T>(s, where);
            } else {
              if (!s.empty() && s[0] == '-') throw ParseError(where + ": must not be negative, got '" + s + "'");
              acc(c) = parse_number<T>(s, where);
            }
          }};
}

template <typename Acc>
Field boolean(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const RunConfig& c) { return acc(c) ? "true" : "false"; },
          [acc](RunConfig& c, const std::string& s, const std::string& where) { acc(c) = parse_bool(s, where); }};
}

template <typename Acc>
Field text(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const RunConfig& c) { return acc(c); },
          [acc](RunConfig& c, const std::string& s, const std::string&) { acc(c) = s; }};
}

template <typename Acc, typename ToS, typename FromS>
Field enumerated(std::string section, std::string key, Acc acc, ToS to_s, FromS from_s) {
  return {std::move(section), std::move(key), [acc, to_s](const RunConfig& c) { return to_s(acc(c)); },
          [acc, from_s](RunConfig& c, const std::string& s, const std::string& where) {
            try {
              acc(c) = from_s(s);
            } catch (const InvalidInput& e) {
              throw ParseError(where + ": " + e.what());
            }
          }};
}

#define TVAE_ACC(member) [](auto& c) -> auto& { return c.member; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(enumerated(
        "run", "task", TVAE_ACC(task), [](Task t) { return to_string(t); },
        [](const std::string& s) { return task_from_string(s); }));
    f.push_back(number("run", "seed", TVAE_ACC(seed)));
    f.push_back(number("run", "workers", TVAE_ACC(workers)));
    f.push_back(text("run", "out_dir", TVAE_ACC(out_dir)));

    f.push_back(text("io", "input", TVAE_ACC(input)));
    f.push_back(text("io", "clean", TVAE_ACC(clean)));
    f.push_back(text("io", "mask", TVAE_ACC(mask)));
    f.push_back(text("io", "output", TVAE_ACC(output)));
    f.push_back(text("io", "checkpoint", TVAE_ACC(checkpoint)));
    f.push_back(text("io", "resume", TVAE_ACC(resume)));

    f.push_back(number("model", "H", TVAE_ACC(model.num_latents)));
    f.push_back({"model", "hidden",
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.model.hidden_layers.size(); ++i)
                     out += (i ? "," : "") + std::to_string(c.model.hidden_layers[i]);
                   return out;
                 },
                 [](RunConfig& c, const std::string& s, const std::string& where) {
                   c.model.hidden_layers.clear();
                   if (s.empty()) return;
                   std::stringstream ss(s);
                   std::string item;
                   while (std::getline(ss, item, ',')) {
                     item.erase(0, item.find_first_not_of(" \t"));
                     item.erase(item.find_last_not_of(" \t") + 1);
                     if (!item.empty() && item[0] == '-') throw ParseError(where + ": layer sizes must be positive");
                     c.model.hidden_layers.push_back(parse_number<std::size_t>(item, where));
                   }
                 }});
    f.push_back(enumerated(
        "model", "activation", TVAE_ACC(model.hidden_activation), [](Activation a) { return to_string(a); },
        [](const std::string& s) { return activation_from_string(s); }));
    f.push_back(number("model", "pi_init", TVAE_ACC(model.pi_init)));
    f.push_back(number("model", "sigma2_init", TVAE_ACC(model.sigma2_init)));

    f.push_back(number("train", "epochs", TVAE_ACC(train.epochs)));
    f.push_back(number("train", "batch_size", TVAE_ACC(train.batch_size)));
    f.push_back(enumerated(
        "train", "lr_schedule", TVAE_ACC(train.schedule.kind), [](LrScheduleKind k) { return to_string(k); },
        [](const std::string& s) { return lr_schedule_kind_from_string(s); }));
    f.push_back(number("train", "min_lr", TVAE_ACC(train.schedule.min_lr)));
    f.push_back(number("train", "max_lr", TVAE_ACC(train.schedule.max_lr)));
    f.push_back(number("train", "epochs_per_cycle", TVAE_ACC(train.schedule.epochs_per_cycle)));
    f.push_back(number("train", "lr_decay", TVAE_ACC(train.schedule.decay)));
    f.push_back(number("train", "adam_beta1", TVAE_ACC(train.adam.beta1)));
    f.push_back(number("train", "adam_beta2", TVAE_ACC(train.adam.beta2)));
    f.push_back(number("train", "adam_eps", TVAE_ACC(train.adam.eps)));
    f.push_back(boolean("train", "sigma2_update", TVAE_ACC(train.sigma2_update)));
    f.push_back(boolean("train", "pi_update", TVAE_ACC(train.pi_update)));
    f.push_back(number("train", "checkpoint_every", TVAE_ACC(checkpoint_every)));
    f.push_back(number("train", "linear_warm_start_epochs", TVAE_ACC(train.linear_warm_start_epochs)));

    f.push_back(number("ea", "set_size", TVAE_ACC(train.ea.set_size)));
    f.push_back(number("ea", "parents", TVAE_ACC(train.ea.n_parents)));
    f.push_back(number("ea", "children", TVAE_ACC(train.ea.n_children_per_parent)));
    f.push_back(number("ea", "generations", TVAE_ACC(train.ea.n_generations)));
    f.push_back(number("ea", "bitflips", TVAE_ACC(train.ea.n_bitflips)));
    f.push_back(boolean("ea", "crossover", TVAE_ACC(train.ea.use_crossover)));
    f.push_back(number("ea", "fitness_offset_eps", TVAE_ACC(train.ea.fitness_offset_eps)));

    f.push_back(number("patches", "size", TVAE_ACC(patch_size)));
    f.push_back(number("patches", "stride", TVAE_ACC(stride)));
    f.push_back(boolean("patches", "mean_subtract", TVAE_ACC(mean_subtract)));
    f.push_back(number("patches", "psnr_every", TVAE_ACC(psnr_every)));

    f.push_back(number("noise", "sigma", TVAE_ACC(noise_sigma)));
    f.push_back(number("noise", "seed", TVAE_ACC(noise_seed)));

    f.push_back(number("inpaint", "missing_fraction", TVAE_ACC(missing_fraction)));
    f.push_back(number("inpaint", "mask_seed", TVAE_ACC(mask_seed)));

    f.push_back(number("bars", "side", TVAE_ACC(bars_side)));
    f.push_back(number("bars", "num_points", TVAE_ACC(bars_num_points)));
    f.push_back(number("bars", "sigma2", TVAE_ACC(bars_sigma2)));
    f.push_back(number("bars", "pi", TVAE_ACC(bars_pi)));
    f.push_back(boolean("bars", "correlated", TVAE_ACC(bars_correlated)));
    f.push_back(number("bars", "runs", TVAE_ACC(bars_runs)));
    return f;
  }();
  return table;
}

#undef TVAE_ACC

}  // namespace

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c = base;
  const auto& table = fields();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ParseError("config key '" + section + "' must appear inside a [section]");
    bool known_section = std::any_of(table.begin(), table.end(), [&](const Field& f) { return f.section == section; });
    if (!known_section) throw ParseError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      const std::string where = section + "." + key;
      auto it = std::find_if(table.begin(), table.end(),
                             [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) throw ParseError("unknown config key '" + where + "'");
      it->set(c, value.get_value<std::string>(), where);
    }
  }
  c.train.seed = c.seed;
  c.train.workers = c.workers;
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), base);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string config_digest(const RunConfig& config) { return fnv1a_hex(serialize_config(config)); }

void validate_config(const RunConfig& c) {
  std::vector<std::string> errors;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.violations().begin(), e.violations().end());
    } catch (const InvalidInput& e) {
      errors.emplace_back(e.what());
    }
  };
  if (c.workers < 1) errors.emplace_back("run.workers must be >= 1");
  collect([&] { c.model.validate(); });
  collect([&] { c.train.validate(); });
  collect([&] { c.train.ea.validate_for(c.model.num_latents); });
  if (c.checkpoint_every < 0) errors.emplace_back("train.checkpoint_every must be >= 0");
  if (c.train.linear_warm_start_epochs > 0 &&
      std::any_of(c.model.hidden_layers.begin(), c.model.hidden_layers.end(),
                  [&](std::size_t m) { return m != c.model.num_latents; }))
    errors.emplace_back("train.linear_warm_start_epochs requires every model.hidden size to equal model.H");
  if (c.patch_size < 1) errors.emplace_back("patches.size must be >= 1");
  if (c.stride < 1) errors.emplace_back("patches.stride must be >= 1");
  if (c.psnr_every < 0) errors.emplace_back("patches.psnr_every must be >= 0");
  if (!(c.noise_sigma >= 0.0)) errors.emplace_back("noise.sigma must be >= 0");
  if (!(c.missing_fraction >= 0.0 && c.missing_fraction <= 1.0))
    errors.emplace_back("inpaint.missing_fraction must lie in [0, 1]");
  if (c.bars_side < 1) errors.emplace_back("bars.side must be >= 1");
  if (c.bars_num_points < 1) errors.emplace_back("bars.num_points must be >= 1");
  if (!(c.bars_sigma2 > 0.0)) errors.emplace_back("bars.sigma2 must be > 0");
  if (!(c.bars_pi > 0.0 && c.bars_pi < 1.0)) errors.emplace_back("bars.pi must lie in (0, 1)");
  if (c.bars_runs < 1) errors.emplace_back("bars.runs must be >= 1");

  switch (c.task) {
    case Task::Train:
    case Task::Denoise:
      if (c.input.empty()) errors.emplace_back("io.input is required for task " + to_string(c.task));
      break;
    case Task::Inpaint:
      if (c.input.empty()) errors.emplace_back("io.input is required for task inpaint");
      if (c.mask.empty() && c.missing_fraction <= 0.0)
        errors.emplace_back("task inpaint needs io.mask or inpaint.missing_fraction > 0");
      break;
    case Task::Eval:
      if (c.checkpoint.empty() && c.clean.empty())
        errors.emplace_back("task eval needs io.checkpoint (with io.input data) or io.input and io.clean images");
      break;
    case Task::BarsTest:
      if (c.model.num_latents != 2 * c.bars_side)
        errors.emplace_back("model.H (" + std::to_string(c.model.num_latents) + ") must equal 2 * bars.side (" +
                            std::to_string(2 * c.bars_side) + ")");
      if (c.model.num_latents > 20) errors.emplace_back("bars-test enumerates 2^H states and needs model.H <= 20");
      break;
  }

  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (auto& e : errors)
    if (seen.insert(e).second) unique.push_back(std::move(e));
  if (!unique.empty()) throw ConfigError(unique);
}

RunConfig load_and_validate(const std::filesystem::path& path, const RunConfig& base) {
  RunConfig c = load_config(path, base);
  validate_config(c);
  return c;
}

}  // namespace tvae
