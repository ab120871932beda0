#include "rgan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rgan/errors.hpp"

namespace rgan::experiment {

std::string to_string(Arm arm) {
  switch (arm) {
    case Arm::baseline: return "baseline";
    case Arm::rgan: return "rgan";
    case Arm::ablation_g_only: return "ablation_g_only";
    case Arm::ablation_d_only: return "ablation_d_only";
    case Arm::ablation_random_noise: return "ablation_random_noise";
  }
  return "?";
}

Arm arm_from_string(const std::string& name) {
  for (auto a : {Arm::baseline, Arm::rgan, Arm::ablation_g_only, Arm::ablation_d_only,
                 Arm::ablation_random_noise}) {
    if (to_string(a) == name) return a;
  }
  throw InputError("unknown arm '" + name + "'");
}

robust::Ablation ablation_of(Arm arm) {
  switch (arm) {
    case Arm::baseline: return robust::Ablation::none;
    case Arm::rgan: return robust::Ablation::both;
    case Arm::ablation_g_only: return robust::Ablation::g_only;
    case Arm::ablation_d_only: return robust::Ablation::d_only;
    case Arm::ablation_random_noise: return robust::Ablation::random_noise;
  }
  return robust::Ablation::none;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw InputError("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw InputError("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (out.back().empty()) throw InputError("empty list element");
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

std::size_t parse_size(std::string_view s) { return static_cast<std::size_t>(parse_uint(s)); }

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define RGAN_DOUBLE(KEY, MEMBER)                                                   \
  Field {                                                                          \
    KEY, [](const ExperimentConfig& c) { return format_double(c.MEMBER); },        \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_double(v); } \
  }
#define RGAN_SIZE(KEY, MEMBER)                                                    \
  Field {                                                                         \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },      \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_size(v); } \
  }
#define RGAN_UINT(KEY, MEMBER)                                                    \
  Field {                                                                         \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },      \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_uint(v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"arms", [](const ExperimentConfig& c) { return join(c.arms, [](Arm a) { return to_string(a); }); },
       [](ExperimentConfig& c, std::string_view v) {
         c.arms.clear();
         for (auto item : split_list(v)) c.arms.push_back(arm_from_string(std::string(item)));
       }},
      {"seeds", [](const ExperimentConfig& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); },
       [](ExperimentConfig& c, std::string_view v) {
         c.seeds.clear();
         for (auto item : split_list(v)) c.seeds.push_back(parse_uint(item));
       }},
      {"output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
       [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(v); }},

      {"data.kind", [](const ExperimentConfig& c) { return gan::to_string(c.data.kind); },
       [](ExperimentConfig& c, std::string_view v) { c.data.kind = gan::data_kind_from_string(std::string(v)); }},
      RGAN_SIZE("data.modes", data.modes),
      RGAN_DOUBLE("data.radius", data.radius),
      RGAN_DOUBLE("data.sigma", data.sigma),
      RGAN_SIZE("data.grid", data.grid),
      RGAN_DOUBLE("data.spacing", data.spacing),
      RGAN_DOUBLE("data.noise", data.noise),
      {"data.probs", [](const ExperimentConfig& c) { return join(c.data.probs, format_double); },
       [](ExperimentConfig& c, std::string_view v) {
         c.data.probs.clear();
         for (auto item : split_list(v)) c.data.probs.push_back(parse_double(item));
       }},
      RGAN_SIZE("data.train_size", robust.base.train_size),

      RGAN_SIZE("gan.batch_size", robust.base.batch_size),
      RGAN_SIZE("gan.latent_dim", robust.base.latent_dim),
      {"gan.hidden",
       [](const ExperimentConfig& c) {
         return join(c.robust.base.hidden, [](std::size_t s) { return std::to_string(s); });
       },
       [](ExperimentConfig& c, std::string_view v) {
         c.robust.base.hidden.clear();
         for (auto item : split_list(v)) c.robust.base.hidden.push_back(parse_size(item));
       }},
      {"gan.activation", [](const ExperimentConfig& c) { return models::to_string(c.robust.base.activation); },
       [](ExperimentConfig& c, std::string_view v) {
         c.robust.base.activation = models::activation_from_string(std::string(v));
       }},
      RGAN_UINT("gan.steps", robust.base.steps),
      RGAN_SIZE("gan.d_steps_per_g_step", robust.base.d_steps_per_g_step),
      {"gan.loss", [](const ExperimentConfig& c) { return gan::to_string(c.robust.base.loss); },
       [](ExperimentConfig& c, std::string_view v) {
         c.robust.base.loss = gan::loss_variant_from_string(std::string(v));
       }},
      RGAN_DOUBLE("gan.g.lr", robust.base.g_adam.lr),
      RGAN_DOUBLE("gan.g.beta1", robust.base.g_adam.beta1),
      RGAN_DOUBLE("gan.g.beta2", robust.base.g_adam.beta2),
      RGAN_DOUBLE("gan.g.eps", robust.base.g_adam.eps),
      RGAN_DOUBLE("gan.d.lr", robust.base.d_adam.lr),
      RGAN_DOUBLE("gan.d.beta1", robust.base.d_adam.beta1),
      RGAN_DOUBLE("gan.d.beta2", robust.base.d_adam.beta2),
      RGAN_DOUBLE("gan.d.eps", robust.base.d_adam.eps),

      RGAN_DOUBLE("robust.lambda", robust.lambda),
      {"robust.weighting", [](const ExperimentConfig& c) { return robust::to_string(c.robust.weighting); },
       [](ExperimentConfig& c, std::string_view v) {
         c.robust.weighting = robust::weighting_from_string(std::string(v));
       }},
      RGAN_DOUBLE("robust.eps1", robust.perturb.eps1),
      RGAN_DOUBLE("robust.eps2", robust.perturb.eps2),
      RGAN_DOUBLE("robust.lambda_z", robust.perturb.lambda_z),
      RGAN_DOUBLE("robust.lambda_d", robust.perturb.lambda_d),
      RGAN_SIZE("robust.inner_steps", robust.perturb.inner_steps),
      RGAN_DOUBLE("robust.inner_lr", robust.perturb.inner_lr),

      RGAN_UINT("eval.interval", eval.interval),
      RGAN_SIZE("eval.samples", eval.samples),
      RGAN_SIZE("eval.stress_samples", eval.stress_samples),
      RGAN_SIZE("eval.stress_repeats", eval.stress_repeats),
      RGAN_SIZE("eval.gap_fresh", eval.gap_fresh),
  };
  return table;
}

#undef RGAN_DOUBLE
#undef RGAN_SIZE
#undef RGAN_UINT

}  // namespace

void ExperimentConfig::validate() const {
  try {
    if (arms.empty()) throw InputError("arms must not be empty");
    if (seeds.empty()) throw InputError("seeds must not be empty");
    if (std::set<Arm>(arms.begin(), arms.end()).size() != arms.size()) throw InputError("arms repeat");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      throw InputError("seeds repeat");
    }
    if (output_dir.empty()) throw InputError("output_dir must not be empty");
    if (eval.samples < 100) throw InputError("eval.samples must be at least 100");
    if (eval.stress_samples < 2) throw InputError("eval.stress_samples must be at least 2");
    if (eval.stress_repeats < 1) throw InputError("eval.stress_repeats must be at least 1");
    if (robust.base.train_size > 0 && eval.gap_fresh > 0 && eval.gap_fresh < 50 * robust.base.train_size) {
      throw InputError("eval.gap_fresh must be 0 or at least 50 * data.train_size");
    }
    data.validate();
    robust.validate();
  } catch (const ContractError& e) {
    throw InputError(e.what());
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
}

robust::RganConfig ExperimentConfig::arm_config(Arm arm) const {
  auto c = robust;
  c.ablation = ablation_of(arm);
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string_view, const Field*> by_key;
  for (const auto& f : fields()) by_key.emplace(f.key, &f);

  ExperimentConfig config;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InputError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw InputError("unknown key '" + std::string(key) + "'", line_no);
    if (!seen.insert(std::string(key)).second) {
      throw InputError("key '" + std::string(key) + "' given twice", line_no);
    }
    try {
      it->second->set(config, value);
    } catch (const InputError& e) {
      throw InputError(std::string(key) + ": " + e.what(), line_no);
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace rgan::experiment
