#include "cw/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cw/targeted.h"
#include "cw/tensor_io.h"

namespace cw {

namespace {

const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> names = {
      {Method::kFgsm, "fgsm"},           {Method::kIfgsm, "ifgsm"},
      {Method::kMifgsm, "mifgsm"},       {Method::kVrigsm, "vrigsm"},
      {Method::kCurls, "curls"},         {Method::kCurlsWhey, "curlswhey"},
      {Method::kTargeted, "targeted"},   {Method::kInterpolation, "interpolation"},
  };
  return names;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string method_name(Method m) {
  for (const auto& [k, v] : method_names()) {
    if (k == m) return v;
  }
  throw std::invalid_argument("unknown method");
}

Method parse_method(const std::string& name) {
  for (const auto& [k, v] : method_names()) {
    if (v == name) return k;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

bool is_targeted(Method m) {
  return m == Method::kTargeted || m == Method::kInterpolation;
}

std::int64_t AttackConfig::query_cap(Method m) const {
  const std::int64_t t0 = curls.rounds;
  const std::int64_t t = curls.steps;
  const std::int64_t bs = curls.search_steps;
  const std::int64_t curls_cap = 1 + t0 * (2 * t + bs);
  const std::int64_t whey_cap = std::int64_t(whey.group_attempts) +
                                whey.stochastic_attempts;
  switch (m) {
    case Method::kFgsm:
      return baseline_rounds;
    case Method::kIfgsm:
    case Method::kMifgsm:
    case Method::kVrigsm:
      return std::int64_t(baseline_rounds) * baseline.iterations;
    case Method::kCurls:
      return curls_cap;
    case Method::kCurlsWhey:
      return curls_cap + whey_cap;
    case Method::kTargeted:
      return seed_steps + curls_cap + whey_cap;
    case Method::kInterpolation:
      return seed_steps;
  }
  return 0;
}

void AttackConfig::validate() const {
  curls.validate();
  whey.validate();
  baseline.validate();
  if (methods.empty()) throw std::invalid_argument("no methods configured");
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (baseline_rounds < 1) {
    throw std::invalid_argument("baseline rounds must be >= 1");
  }
  if (seed_steps < 0) throw std::invalid_argument("seed steps must be >= 0");
  if (targets_per_image < 1) {
    throw std::invalid_argument("targets per image must be >= 1");
  }
  if (images_per_class < 1) {
    throw std::invalid_argument("images per class must be >= 1");
  }
  if (substitutes.empty() || targets.empty()) {
    throw std::invalid_argument("substitute and target lists must be nonempty");
  }
  for (Method m : methods) {
    if (query_cap(m) > budget) {
      throw std::invalid_argument(method_name(m) + " may need " +
                                  std::to_string(query_cap(m)) +
                                  " queries, over the budget of " +
                                  std::to_string(budget));
    }
    if (m == Method::kCurlsWhey) {
      const std::int64_t nominal =
          std::int64_t(curls.rounds) * (curls.steps + curls.search_steps) * 2 +
          whey.group_attempts + whey.stochastic_attempts;
      if (nominal > budget) {
        throw std::invalid_argument(
            "curlswhey needs T0*(T+bs)*2+T1+T2 = " + std::to_string(nominal) +
            " queries, over the budget of " + std::to_string(budget));
      }
    }
  }
}

namespace {

namespace pt = boost::property_tree;

using Setter = void (*)(AttackConfig&, const std::string&);

int to_int(const std::string& v) {
  std::size_t used = 0;
  const long long n = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
  return int(n);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("not a number: " + v);
  return d;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"attack",
       {
           {"methods",
            [](AttackConfig& c, const std::string& v) {
              c.methods.clear();
              for (const auto& m : split_list(v, ',')) {
                c.methods.push_back(parse_method(m));
              }
            }},
           {"budget",
            [](AttackConfig& c, const std::string& v) {
              c.budget = std::stoll(v);
            }},
           {"seed",
            [](AttackConfig& c, const std::string& v) {
              c.seed = std::stoull(v);
            }},
           {"images_per_class",
            [](AttackConfig& c, const std::string& v) {
              c.images_per_class = to_int(v);
            }},
           {"substitutes",
            [](AttackConfig& c, const std::string& v) {
              c.substitutes = split_list(v, ',');
            }},
           {"targets",
            [](AttackConfig& c, const std::string& v) {
              c.targets = split_list(v, ',');
            }},
           {"record_time",
            [](AttackConfig& c, const std::string& v) {
              c.record_time = to_bool(v);
            }},
       }},
      {"curls",
       {
           {"T0", [](AttackConfig& c, const std::string& v) {
              c.curls.rounds = to_int(v);
            }},
           {"T", [](AttackConfig& c, const std::string& v) {
              c.curls.steps = to_int(v);
            }},
           {"bs", [](AttackConfig& c, const std::string& v) {
              c.curls.search_steps = to_int(v);
            }},
           {"eps0", [](AttackConfig& c, const std::string& v) {
              c.curls.eps0 = to_double(v);
            }},
           {"alpha", [](AttackConfig& c, const std::string& v) {
              if (v == "auto") {
                c.curls.alpha.reset();
              } else {
                c.curls.alpha = to_double(v);
              }
            }},
           {"s", [](AttackConfig& c, const std::string& v) {
              c.curls.s = to_double(v);
            }},
           {"eps_shrink", [](AttackConfig& c, const std::string& v) {
              c.curls.eps_shrink = to_double(v);
            }},
           {"mean_direction", [](AttackConfig& c, const std::string& v) {
              c.curls.mean_direction = to_bool(v);
            }},
       }},
      {"whey",
       {
           {"T1", [](AttackConfig& c, const std::string& v) {
              c.whey.group_attempts = to_int(v);
            }},
           {"T2", [](AttackConfig& c, const std::string& v) {
              c.whey.stochastic_attempts = to_int(v);
            }},
           {"delta", [](AttackConfig& c, const std::string& v) {
              c.whey.delta = to_double(v);
            }},
       }},
      {"baseline",
       {
           {"eps", [](AttackConfig& c, const std::string& v) {
              c.baseline.eps = to_double(v);
            }},
           {"alpha", [](AttackConfig& c, const std::string& v) {
              c.baseline.alpha = to_double(v);
            }},
           {"T", [](AttackConfig& c, const std::string& v) {
              c.baseline.iterations = to_int(v);
            }},
           {"T0", [](AttackConfig& c, const std::string& v) {
              c.baseline_rounds = to_int(v);
            }},
           {"mu", [](AttackConfig& c, const std::string& v) {
              c.baseline.momentum = to_double(v);
            }},
           {"s", [](AttackConfig& c, const std::string& v) {
              c.baseline.s = to_double(v);
            }},
           {"m", [](AttackConfig& c, const std::string& v) {
              c.baseline.samples = to_int(v);
            }},
       }},
      {"targeted",
       {
           {"seed_steps", [](AttackConfig& c, const std::string& v) {
              c.seed_steps = to_int(v);
            }},
           {"targets_per_image", [](AttackConfig& c, const std::string& v) {
              c.targets_per_image = to_int(v);
            }},
       }},
  };
  return table;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

AttackConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  AttackConfig cfg;
  for (const auto& [section, body] : tree) {
    auto sec = setters().find(section);
    if (sec == setters().end()) {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) {
        throw std::invalid_argument("config: unknown key " + section + "." +
                                    key);
      }
      try {
        it->second(cfg, value.data());
      } catch (const std::exception& e) {
        throw std::invalid_argument("config: bad value for " + section + "." +
                                    key + ": " + e.what());
      }
    }
  }
  cfg.validate();
  return cfg;
}

AttackConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  return parse_config(in);
}

std::string format_config(const AttackConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(method_name(m));
  std::ostringstream o;
  o << "[attack]\n"
    << "methods = " << join(methods, ',') << "\n"
    << "budget = " << c.budget << "\n"
    << "seed = " << c.seed << "\n"
    << "images_per_class = " << c.images_per_class << "\n"
    << "substitutes = " << join(c.substitutes, ',') << "\n"
    << "targets = " << join(c.targets, ',') << "\n"
    << "record_time = " << (c.record_time ? "true" : "false") << "\n\n"
    << "[curls]\n"
    << "T0 = " << c.curls.rounds << "\n"
    << "T = " << c.curls.steps << "\n"
    << "bs = " << c.curls.search_steps << "\n"
    << "eps0 = " << fmt(c.curls.eps0) << "\n"
    << "alpha = " << (c.curls.alpha ? fmt(*c.curls.alpha) : "auto") << "\n"
    << "s = " << fmt(c.curls.s) << "\n"
    << "eps_shrink = " << fmt(c.curls.eps_shrink) << "\n"
    << "mean_direction = " << (c.curls.mean_direction ? "true" : "false")
    << "\n\n"
    << "[whey]\n"
    << "T1 = " << c.whey.group_attempts << "\n"
    << "T2 = " << c.whey.stochastic_attempts << "\n"
    << "delta = " << fmt(c.whey.delta) << "\n\n"
    << "[baseline]\n"
    << "eps = " << fmt(c.baseline.eps) << "\n"
    << "alpha = " << fmt(c.baseline.alpha) << "\n"
    << "T = " << c.baseline.iterations << "\n"
    << "T0 = " << c.baseline_rounds << "\n"
    << "mu = " << fmt(c.baseline.momentum) << "\n"
    << "s = " << fmt(c.baseline.s) << "\n"
    << "m = " << c.baseline.samples << "\n\n"
    << "[targeted]\n"
    << "seed_steps = " << c.seed_steps << "\n"
    << "targets_per_image = " << c.targets_per_image << "\n";
  return o.str();
}

void set_parameter(AttackConfig& cfg, const std::string& name, double value) {
  auto whole = [&]() {
    if (value != std::floor(value)) {
      throw std::invalid_argument(name + " needs an integer value");
    }
    return int(value);
  };
  if (name == "T") {
    cfg.curls.steps = whole();
  } else if (name == "s") {
    cfg.curls.s = value;
  } else if (name == "bs") {
    cfg.curls.search_steps = whole();
  } else if (name == "T0") {
    cfg.curls.rounds = whole();
  } else if (name == "T1") {
    cfg.whey.group_attempts = whole();
  } else if (name == "T2") {
    cfg.whey.stochastic_attempts = whole();
  } else if (name == "delta") {
    cfg.whey.delta = value;
  } else if (name == "eps0") {
    cfg.curls.eps0 = value;
  } else {
    throw std::invalid_argument("cannot sweep '" + name +
                                "'; expected T, s, bs, T0, T1, T2, delta or "
                                "eps0");
  }
}

void Zoo::add(std::string id, Classifier model, double test_accuracy) {
  if (id.empty() || id.find_first_of("+/ ,") != std::string::npos) {
    throw std::invalid_argument("bad model id '" + id + "'");
  }
  if (contains(id)) throw std::invalid_argument("duplicate model id " + id);
  entries_.push_back({std::move(id), std::move(model), test_accuracy});
}

bool Zoo::contains(const std::string& id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const ZooEntry& e) { return e.id == id; });
}

const Classifier& Zoo::get(const std::string& id) const {
  for (const ZooEntry& e : entries_) {
    if (e.id == id) return e.model;
  }
  throw std::out_of_range("no model '" + id + "' in zoo");
}

std::vector<std::string> Zoo::ids() const {
  std::vector<std::string> out;
  for (const ZooEntry& e : entries_) out.push_back(e.id);
  return out;
}

std::vector<const Model*> Zoo::resolve(const std::string& spec) const {
  std::vector<const Model*> out;
  for (const std::string& id : split_list(spec, '+')) out.push_back(&get(id));
  if (out.empty()) throw std::invalid_argument("empty model spec");
  return out;
}

Zoo train_zoo(const Dataset& data, const ZooOptions& options) {
  struct Arch {
    const char* id;
    Classifier model;
  };
  std::vector<Arch> archs = {
      {"linear", Classifier::linear(data.shape, data.classes)},
      {"mlp", Classifier::mlp(data.shape, data.classes, 64)},
      {"conv", Classifier::conv(data.shape, data.classes, 8, 3, 32)},
  };
  Zoo zoo;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    Rng rng(mix_seed(options.seed, i + 1));
    Classifier init = archs[i].model;
    init.init_weights(rng);
    TrainedModel plain = train(init, data, options.training, rng);
    zoo.add(archs[i].id, std::move(plain.model), plain.test_accuracy);
    if (options.adversarial) {
      Rng adv_rng(mix_seed(options.seed, 100 + i));
      TrainedModel adv = train_adversarial(init, data, options.training,
                                           options.adversarial_eps, adv_rng);
      zoo.add(std::string(archs[i].id) + "-adv", std::move(adv.model),
              adv.test_accuracy);
    }
  }
  return zoo;
}

void save_zoo(const std::filesystem::path& dir, const Zoo& zoo) {
  std::filesystem::create_directories(dir);
  std::ofstream list(dir / "zoo.txt");
  if (!list) throw std::runtime_error("cannot write " + dir.string());
  for (const ZooEntry& e : zoo.entries()) {
    save_model(dir / (e.id + ".cwm"), e.model);
    list << e.id << ' ' << fmt(e.test_accuracy) << '\n';
  }
}

Zoo load_zoo(const std::filesystem::path& dir) {
  std::ifstream list(dir / "zoo.txt");
  if (!list) throw std::runtime_error("missing " + (dir / "zoo.txt").string());
  Zoo zoo;
  std::string line;
  while (std::getline(list, line)) {
    std::istringstream in(line);
    std::string id;
    double acc = 0.0;
    if (!(in >> id)) continue;
    in >> acc;
    try {
      zoo.add(id, load_model(dir / (id + ".cwm")), acc);
    } catch (const std::exception& e) {
      throw std::runtime_error("model '" + id + "': " + e.what());
    }
  }
  return zoo;
}

std::pair<double, double> median_average(std::vector<double> d) {
  if (d.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double median =
      n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  double sum = 0.0;
  for (double v : d) sum += v;
  return {median, sum / double(n)};
}

double failure_linf(const Image& x) {
  double m = 0.0;
  for (double v : x.values()) m = std::max(m, std::max(v, 1.0 - v));
  return m;
}

std::string cell_key(const std::string& sub, const std::string& target,
                     Method m) {
  return sub + "/" + target + "/" + method_name(m);
}

std::map<std::string, CellStats> summarize(const ResultTable& table) {
  std::map<std::string, std::vector<const ResultRow*>> cells;
  for (const ResultRow& r : table.rows) {
    cells[cell_key(r.sub_model, r.target_model, r.method)].push_back(&r);
  }
  std::map<std::string, CellStats> out;
  for (const auto& [key, rows] : cells) {
    CellStats s;
    s.count = rows.size();
    std::vector<double> d;
    double q = 0.0;
    for (const ResultRow* r : rows) {
      d.push_back(r->l2);
      s.successes += r->success;
      q += double(r->queries);
      s.max_queries = std::max(s.max_queries, r->queries);
    }
    std::tie(s.median, s.average) = median_average(d);
    s.mean_queries = q / double(rows.size());
    out[key] = s;
  }
  return out;
}

std::vector<std::size_t> select_images(const Dataset& data, const Zoo& zoo,
                                       const std::vector<std::string>& targets,
                                       int per_class) {
  std::vector<std::vector<const Model*>> models;
  for (const std::string& t : targets) models.push_back(zoo.resolve(t));
  std::vector<int> taken(std::size_t(data.classes), 0);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const Example& e = data.test[i];
    if (taken[std::size_t(e.label)] >= per_class) continue;
    bool ok = true;
    for (const auto& m : models) {
      TargetOracle audit(m, std::nullopt);
      if (audit.peek(e.image.tensor()).label != e.label) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    ++taken[std::size_t(e.label)];
    out.push_back(i);
  }
  return out;
}

std::optional<std::size_t> nearest_of_class(
    const Dataset& data, const std::vector<const Model*>& target,
    const Image& x, int label) {
  TargetOracle audit(target, std::nullopt);
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const Example& e = data.test[i];
    if (e.label != label) continue;
    if (audit.peek(e.image.tensor()).label != label) continue;
    const double d = l2_distance(x, e.image);
    if (!best || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

int thread_count() {
  if (const char* env = std::getenv("CW_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Task {
  std::size_t image = 0;
  std::string sub;
  std::string target;
  Method method = Method::kIfgsm;
  int target_class = -1;
};

// Draws the target classes of one image; shared by every targeted cell so
// methods are compared on the same pairs.
std::vector<int> draw_target_classes(std::uint64_t seed, std::size_t image,
                                     int label, int classes, int count) {
  std::vector<int> pool;
  for (int k = 0; k < classes; ++k) {
    if (k != label) pool.push_back(k);
  }
  Rng rng(mix_seed(mix_seed(seed, 0x7461726765747321ull), image));
  for (std::size_t i = pool.size(); i > 1; --i) {
    std::swap(pool[i - 1], pool[rng.below(i)]);
  }
  if (int(pool.size()) > count) pool.resize(std::size_t(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

AttackResult baseline_rounds(const Image& x, int y, Method m,
                             const SubstituteOracle& sub, TargetOracle& target,
                             const AttackConfig& cfg, Rng& rng) {
  const bool deterministic = m != Method::kVrigsm;
  BaselineConfig bc = cfg.baseline;
  AttackResult best;
  const std::int64_t used0 = target.ledger().used();
  for (int r = 0; r < cfg.baseline_rounds; ++r) {
    AttackResult res;
    switch (m) {
      case Method::kFgsm:
        res = fgsm(x, y, sub, target, bc.eps);
        break;
      case Method::kIfgsm:
        res = i_fgsm(x, y, sub, target, bc);
        break;
      case Method::kMifgsm:
        res = mi_fgsm(x, y, sub, target, bc);
        break;
      default:
        res = vr_igsm(x, y, sub, target, bc, rng);
        break;
    }
    if (res.success) {
      best.offer(x, *res.adversarial);
      bc.eps = cfg.curls.eps_shrink * res.linf;
    } else if (deterministic) {
      break;
    }
    if (res.budget_exhausted) {
      best.budget_exhausted = true;
      break;
    }
  }
  best.queries = target.ledger().used() - used0;
  return best;
}

ResultRow run_task(const Task& task, const Zoo& zoo, const Dataset& data,
                   const AttackConfig& cfg) {
  const Example& ex = data.test[task.image];
  ResultRow row;
  row.image_id = std::to_string(task.image);
  if (task.target_class >= 0) {
    row.image_id += ":" + std::to_string(task.target_class);
  }
  row.sub_model = task.sub;
  row.target_model = task.target;
  row.method = task.method;
  row.l2 = worst_case_distance(ex.image);
  row.linf = failure_linf(ex.image);

  const auto start = std::chrono::steady_clock::now();
  try {
    const SubstituteOracle sub(zoo.get(task.sub));
    const std::vector<const Model*> target_models = zoo.resolve(task.target);
    TargetOracle target(target_models, cfg.budget);
    Rng rng(mix_seed(mix_seed(cfg.seed, fnv1a(cell_key(task.sub, task.target,
                                                       task.method))),
                     task.image * 1024 + std::uint64_t(task.target_class + 1)));
    Goal goal = Goal::untargeted(ex.label);
    AttackResult res;
    switch (task.method) {
      case Method::kFgsm:
      case Method::kIfgsm:
      case Method::kMifgsm:
      case Method::kVrigsm:
        res = baseline_rounds(ex.image, ex.label, task.method, sub, target,
                              cfg, rng);
        break;
      case Method::kCurls:
        res = curls_attack(ex.image, ex.label, sub, target, cfg.curls, rng);
        break;
      case Method::kCurlsWhey:
        res = curls_whey_attack(ex.image, ex.label, sub, target, cfg.curls,
                                cfg.whey, rng);
        break;
      case Method::kTargeted:
      case Method::kInterpolation: {
        const auto far =
            nearest_of_class(data, target_models, ex.image, task.target_class);
        if (!far) throw std::runtime_error("no usable target-class image");
        TargetOracle setup(target_models, std::nullopt);
        const TargetedGoal tg = TargetedGoal::make(
            ex.label, task.target_class, data.test[*far].image, setup);
        goal = tg.goal();
        if (task.method == Method::kTargeted) {
          TargetedConfig tc{cfg.seed_steps, cfg.curls, cfg.whey};
          res = targeted_attack(ex.image, tg, sub, target, tc, rng);
        } else {
          const std::int64_t used0 = target.ledger().used();
          res.offer(ex.image,
                    interpolation_seed(ex.image, tg, target, cfg.seed_steps)
                        .image);
          res.queries = target.ledger().used() - used0;
        }
        break;
      }
    }
    row.queries = res.queries;
    row.rounds = res.rounds.size();
    if (res.success) {
      // Stored files hold float32; only keep what survives the narrowing.
      const Image stored = round_to_float(*res.adversarial);
      if (goal.reached_by(target.peek(stored.tensor()).label)) {
        row.success = true;
        row.l2 = l2_distance(ex.image, stored);
        row.linf = linf_distance(ex.image, stored);
        row.adversarial = stored;
      }
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  if (cfg.record_time) {
    row.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  }
  return row;
}

}  // namespace

ResultTable run_matrix(const Zoo& zoo, const Dataset& data,
                       const AttackConfig& cfg, int threads) {
  cfg.validate();
  for (const std::string& s : cfg.substitutes) zoo.get(s);
  for (const std::string& t : cfg.targets) zoo.resolve(t);

  const std::vector<std::size_t> images =
      select_images(data, zoo, cfg.targets, cfg.images_per_class);
  std::vector<Task> tasks;
  for (Method m : cfg.methods) {
    for (const std::string& s : cfg.substitutes) {
      for (const std::string& t : cfg.targets) {
        for (std::size_t i : images) {
          if (!is_targeted(m)) {
            tasks.push_back({i, s, t, m, -1});
            continue;
          }
          for (int k : draw_target_classes(cfg.seed, i, data.test[i].label,
                                           data.classes,
                                           cfg.targets_per_image)) {
            tasks.push_back({i, s, t, m, k});
          }
        }
      }
    }
  }

  ResultTable table;
  table.rows.resize(tasks.size());
  const int workers =
      std::max(1, std::min<int>(threads > 0 ? threads : thread_count(),
                                int(std::max<std::size_t>(tasks.size(), 1))));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      table.rows[i] = run_task(tasks[i], zoo, data, cfg);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return table;
}

SweepResult run_sweep(const Zoo& zoo, const Dataset& data,
                      const AttackConfig& base, const std::string& parameter,
                      const std::vector<double>& values, Method method,
                      const std::string& sub, const std::string& target,
                      int threads) {
  if (values.empty()) throw std::invalid_argument("sweep needs values");
  SweepResult out;
  out.parameter = parameter;
  out.method = method;
  out.sub_model = sub;
  out.target_model = target;
  for (double v : values) {
    AttackConfig cfg = base;
    set_parameter(cfg, parameter, v);
    cfg.methods = {method};
    cfg.substitutes = {sub};
    cfg.targets = {target};
    const std::int64_t nominal =
        std::int64_t(cfg.curls.rounds) *
            (cfg.curls.steps + cfg.curls.search_steps) * 2 +
        cfg.whey.group_attempts + cfg.whey.stochastic_attempts;
    cfg.budget = std::max({cfg.budget, cfg.query_cap(method), nominal});
    ResultTable t = run_matrix(zoo, data, cfg, threads);
    SweepPoint p;
    p.value = v;
    p.stats = summarize(t).at(cell_key(sub, target, method));
    out.points.push_back(p);
    out.table.rows.insert(out.table.rows.end(),
                          std::make_move_iterator(t.rows.begin()),
                          std::make_move_iterator(t.rows.end()));
  }
  return out;
}

}  // namespace cw
