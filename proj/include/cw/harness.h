#ifndef CW_HARNESS_H_
#define CW_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cw/baselines.h"
#include "cw/classifier.h"
#include "cw/curls.h"
#include "cw/dataset.h"
#include "cw/training.h"
#include "cw/whey.h"

namespace cw {

enum class Method {
  kFgsm,
  kIfgsm,
  kMifgsm,
  kVrigsm,
  kCurls,
  kCurlsWhey,
  kTargeted,
  // Bisection toward a target-class image only; the targeted reference.
  kInterpolation,
};

std::string method_name(Method m);
// Throws std::invalid_argument on an unknown name.
Method parse_method(const std::string& name);
bool is_targeted(Method m);

struct AttackConfig {
  std::vector<Method> methods{Method::kFgsm,  Method::kIfgsm,
                              Method::kMifgsm, Method::kVrigsm,
                              Method::kCurls, Method::kCurlsWhey};
  CurlsConfig curls;
  WheyConfig whey;
  BaselineConfig baseline;
  // Outer eps rounds for the single-trajectory baselines.
  int baseline_rounds = 20;
  int seed_steps = 10;
  int targets_per_image = 5;
  std::int64_t budget = 200;
  std::uint64_t seed = 1;
  int images_per_class = 10;
  std::vector<std::string> substitutes{"linear", "mlp", "conv"};
  std::vector<std::string> targets{"linear", "mlp", "conv"};
  // Wall time per attack in results.csv; off keeps the file byte-stable.
  bool record_time = false;

  // Queries a method may need under this config.
  std::int64_t query_cap(Method m) const;
  // Throws std::invalid_argument on bad values or when a method's cap
  // exceeds the budget.
  void validate() const;
};

// INI text: [attack], [curls], [whey], [baseline], [targeted] sections.
// Missing keys keep their defaults; unknown keys are errors.
AttackConfig parse_config(std::istream& in);
AttackConfig load_config(const std::filesystem::path& path);
std::string format_config(const AttackConfig& cfg);

// Pulls one sweepable parameter into cfg: T, s, bs, T0, T1, T2, delta,
// eps0.
void set_parameter(AttackConfig& cfg, const std::string& name, double value);

struct ZooEntry {
  std::string id;
  Classifier model;
  double test_accuracy = 0.0;
};

class Zoo {
 public:
  void add(std::string id, Classifier model, double test_accuracy = 0.0);
  bool contains(const std::string& id) const;
  // Throws std::out_of_range naming the id.
  const Classifier& get(const std::string& id) const;
  const std::vector<ZooEntry>& entries() const { return entries_; }
  std::vector<std::string> ids() const;

  // "a+b+c" names an ensemble of zoo members.
  std::vector<const Model*> resolve(const std::string& spec) const;

 private:
  std::vector<ZooEntry> entries_;
};

struct ZooOptions {
  TrainOptions training;
  std::uint64_t seed = 1;
  // Also train "<id>-adv" copies with FGSM adversarial training.
  bool adversarial = false;
  double adversarial_eps = 0.1;
};

// linear, mlp (64 hidden) and conv (8 3x3 filters, 32 hidden), each from
// its own seed.
Zoo train_zoo(const Dataset& data, const ZooOptions& options);
// <dir>/<id>.cwm plus zoo.txt listing ids.
void save_zoo(const std::filesystem::path& dir, const Zoo& zoo);
// Throws std::runtime_error naming the model that failed to load.
Zoo load_zoo(const std::filesystem::path& dir);

std::pair<double, double> median_average(std::vector<double> distances);

// L-inf distance from x to the farthest corner of the unit box; paired
// with worst_case_distance as the failure sentinel.
double failure_linf(const Image& x);

struct ResultRow {
  std::string image_id;  // test index, or "index:target" for targeted rows
  std::string sub_model;
  std::string target_model;
  Method method = Method::kIfgsm;
  bool success = false;
  double l2 = 0.0;    // sentinel distance on failure
  double linf = 0.0;  // sentinel on failure
  std::int64_t queries = 0;
  double seconds = 0.0;
  std::size_t rounds = 0;
  std::optional<Image> adversarial;  // float32-representable
  std::string error;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

struct CellStats {
  std::size_t count = 0;
  std::size_t successes = 0;
  double median = 0.0;
  double average = 0.0;
  double mean_queries = 0.0;
  std::int64_t max_queries = 0;
  double success_rate() const {
    return count ? double(successes) / double(count) : 0.0;
  }
};

// Key "sub/target/method".
std::string cell_key(const std::string& sub, const std::string& target,
                     Method m);
std::map<std::string, CellStats> summarize(const ResultTable& table);

// First `per_class` test images of each class that every named target
// classifies correctly, in split order.
std::vector<std::size_t> select_images(const Dataset& data, const Zoo& zoo,
                                       const std::vector<std::string>& targets,
                                       int per_class);

// Test image of class `label` nearest to x that `target` classifies as
// label; nullopt when none exists.
std::optional<std::size_t> nearest_of_class(const Dataset& data,
                                            const std::vector<const Model*>& target,
                                            const Image& x, int label);

// Worker count from CW_THREADS, defaulting to the hardware concurrency.
int thread_count();

// Every (image, substitute, target, method) attack of cfg; targeted methods
// add one row per drawn target class. Row order and contents depend only on
// the inputs, not on the thread count.
ResultTable run_matrix(const Zoo& zoo, const Dataset& data,
                       const AttackConfig& cfg, int threads = 0);

struct SweepPoint {
  double value = 0.0;
  CellStats stats;
};

struct SweepResult {
  std::string parameter;
  Method method = Method::kCurlsWhey;
  std::string sub_model;
  std::string target_model;
  std::vector<SweepPoint> points;
  ResultTable table;
};

// One run_matrix cell per value. The budget is raised to each point's own
// query cap so larger settings are not cut short.
SweepResult run_sweep(const Zoo& zoo, const Dataset& data,
                      const AttackConfig& base, const std::string& parameter,
                      const std::vector<double>& values, Method method,
                      const std::string& sub, const std::string& target,
                      int threads = 0);

}  // namespace cw

#endif  // CW_HARNESS_H_
