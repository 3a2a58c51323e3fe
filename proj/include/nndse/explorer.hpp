#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nndse/design_space.hpp"
#include "nndse/evaluator.hpp"
#include "nndse/pareto.hpp"
#include "nndse/surrogate.hpp"

namespace nndse {

struct DseConfig {
    double alpha = 1e-4;
    int max_iterations = 100;
    double sigma = 0.15;       // walk stddev, fraction of each index range
    double p_cat = 0.2;        // categorical resample probability per proposal
    std::uint64_t seed = 0;
    std::uint64_t proposal_cap = 100000; // consecutive rejections before a stall error
    SurrogateTrainConfig surrogate;
    CostParams costs;

    void validate() const;
    nlohmann::json to_json() const;
    static DseConfig from_json(const nlohmann::json& j);
};

struct IterationRecord {
    int iteration = 0;
    std::string config_id;
    std::vector<double> encoded;
    double predicted = 0.0; // clamped prediction used in the accept decision
    double measured = 0.0;
    double cost = 0.0;
    std::uint64_t proposals = 0; // candidates generated during this step, accepted one included
    std::vector<std::string> front_ids; // front snapshot after this iteration

    nlohmann::json to_json() const;
    static IterationRecord from_json(const nlohmann::json& j);
};

struct EvalFailure {
    int after_iteration = 0;
    std::string config_id;
    std::string message;
};

struct ExplorationLog {
    nlohmann::json header;
    std::vector<IterationRecord> records;
    std::vector<EvalFailure> failures;
    std::vector<nlohmann::json> events; // records and failures in file order
    std::optional<nlohmann::json> checkpoint;
    std::uintmax_t valid_byte_length = 0; // file prefix holding complete lines
};

// Step-3 rule: predicted-dominated candidates are accepted with probability
// alpha, all others with probability 1 - alpha. Consumes one uniform draw.
bool decide(const ObjectivePoint& predicted, const ParetoFront& front, double alpha, Rng& rng);

// The sequential exploration loop. Holds the walk center, the evaluated set,
// the measured-point front and the surrogate; step() performs one iteration.
class Explorer {
public:
    Explorer(const SpaceLayout& layout, Evaluator& evaluator, const EvalTarget& target,
             const DseConfig& config);

    struct StepOutcome {
        IterationRecord record;
        std::vector<EvalFailure> failures; // evaluator errors hit during this step
    };

    StepOutcome step();

    int iteration() const { return iteration_; }
    const ParetoFront& front() const { return front_; }
    const RegressorModel& model() const { return model_; }
    const TrainingSet& training_set() const { return training_; }

    nlohmann::json checkpoint_json() const;

    // Rebuilds an explorer positioned after the log's last complete record.
    // Uses the checkpoint fast path when it matches the record count,
    // otherwise deterministically replays the logged iterations (serving
    // measured values from the log, so nothing is re-evaluated). Throws
    // ResumeError when the log and a regenerated record disagree.
    static Explorer resume(const SpaceLayout& layout, Evaluator& evaluator,
                           const EvalTarget& target, const DseConfig& config,
                           const ExplorationLog& log);

private:
    struct Candidate {
        CandidateConfig config;
        std::string key;
        std::vector<double> encoded;
        double predicted = 0.0;
        double cost = 0.0;
    };

    double cost_of(const CandidateConfig& config) const;
    StepOutcome step_with(Evaluator& evaluator);

    const SpaceLayout* layout_;
    Evaluator* evaluator_;
    EvalTarget target_;
    DseConfig config_;
    Rng rng_;
    RegressorModel model_;
    RegressorWorkspace workspace_;
    TrainingSet training_;
    ParetoFront front_;
    std::set<std::string> evaluated_;
    CandidateConfig center_;
    int iteration_ = 0;
};

// Runs max_iterations steps, streaming events to <out_dir>/log.jsonl and
// writing front.csv, points.csv and rsm_error.csv on completion. The header
// carries the full run manifest; extra_header fields are merged in.
ExplorationLog run_exploration(const SpaceLayout& layout, Evaluator& evaluator,
                               const EvalTarget& target, const DseConfig& config,
                               const std::filesystem::path& out_dir,
                               const nlohmann::json& extra_header = nlohmann::json::object());

// Continues an interrupted or completed run up to max_iterations (taken from
// the stored header unless overridden).
ExplorationLog resume_exploration(const SpaceLayout& layout, Evaluator& evaluator,
                                  const std::filesystem::path& out_dir,
                                  std::optional<int> max_iterations = std::nullopt);

ExplorationLog read_log(const std::filesystem::path& log_file);

struct ExhaustiveResult {
    std::vector<ObjectivePoint> all; // enumeration order
    ParetoFront front;
    std::size_t infeasible = 0;
    std::size_t failures = 0;
};

// Evaluates every config in the space; the reference oracle for ADRS.
// Refuses (ValidationError) when the space size exceeds the ceiling.
ExhaustiveResult exhaustive(const SpaceLayout& layout, Evaluator& evaluator,
                            const EvalTarget& target, const CostParams& costs,
                            std::uint64_t ceiling = 100000, int workers = 1);

// ADRS of the explored front after each iteration, against a reference front.
std::vector<std::pair<int, double>> adrs_curve(const std::vector<IterationRecord>& records,
                                               const ParetoFront& reference);

} // namespace nndse
