#include "nndse/explorer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "nndse/errors.hpp"

namespace nndse {

using nlohmann::json;

void DseConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("dse: alpha must be in (0, 1)");
    if (max_iterations < 1) throw ValidationError("dse: max_iterations must be >= 1");
    if (sigma <= 0.0) throw ValidationError("dse: sigma must be > 0");
    if (p_cat < 0.0 || p_cat > 1.0) throw ValidationError("dse: p_cat must be in [0, 1]");
    if (proposal_cap < 1) throw ValidationError("dse: proposal_cap must be >= 1");
}

json DseConfig::to_json() const {
    json j;
    j["alpha"] = alpha;
    j["max_iterations"] = max_iterations;
    j["sigma"] = sigma;
    j["p_cat"] = p_cat;
    j["seed"] = seed;
    j["proposal_cap"] = proposal_cap;
    j["surrogate"] = {{"learning_rate", surrogate.learning_rate},
                      {"epochs_per_update", surrogate.epochs_per_update},
                      {"hidden_multiple", surrogate.hidden_multiple}};
    j["costs"] = {{"weight_unit_cost", costs.weight_unit_cost},
                  {"mac_unit_cost", costs.mac_unit_cost}};
    return j;
}

DseConfig DseConfig::from_json(const json& j) {
    DseConfig c;
    c.alpha = j.at("alpha").get<double>();
    c.max_iterations = j.at("max_iterations").get<int>();
    c.sigma = j.at("sigma").get<double>();
    c.p_cat = j.at("p_cat").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.proposal_cap = j.at("proposal_cap").get<std::uint64_t>();
    c.surrogate.learning_rate = j.at("surrogate").at("learning_rate").get<double>();
    c.surrogate.epochs_per_update = j.at("surrogate").at("epochs_per_update").get<int>();
    c.surrogate.hidden_multiple = j.at("surrogate").at("hidden_multiple").get<int>();
    c.costs.weight_unit_cost = j.at("costs").at("weight_unit_cost").get<double>();
    c.costs.mac_unit_cost = j.at("costs").at("mac_unit_cost").get<double>();
    c.validate();
    return c;
}

json IterationRecord::to_json() const {
    json j;
    j["type"] = "iteration";
    j["iter"] = iteration;
    j["id"] = config_id;
    j["encoded"] = encoded;
    j["predicted"] = predicted;
    j["measured"] = measured;
    j["cost"] = cost;
    j["proposals"] = proposals;
    j["front"] = front_ids;
    return j;
}

IterationRecord IterationRecord::from_json(const json& j) {
    IterationRecord r;
    r.iteration = j.at("iter").get<int>();
    r.config_id = j.at("id").get<std::string>();
    r.encoded = j.at("encoded").get<std::vector<double>>();
    r.predicted = j.at("predicted").get<double>();
    r.measured = j.at("measured").get<double>();
    r.cost = j.at("cost").get<double>();
    r.proposals = j.at("proposals").get<std::uint64_t>();
    r.front_ids = j.at("front").get<std::vector<std::string>>();
    return r;
}

bool decide(const ObjectivePoint& predicted, const ParetoFront& front, double alpha, Rng& rng) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("decide: alpha must be in (0, 1)");
    bool dominated = std::any_of(front.points().begin(), front.points().end(),
                                 [&](const ObjectivePoint& q) { return dominates(q, predicted); });
    double u = rng.uniform();
    return dominated ? u < alpha : u < 1.0 - alpha;
}

Explorer::Explorer(const SpaceLayout& layout, Evaluator& evaluator, const EvalTarget& target,
                   const DseConfig& config)
    : layout_(&layout), evaluator_(&evaluator), target_(target), config_(config),
      rng_(config.seed) {
    config_.validate();
    model_ = RegressorModel::init(static_cast<int>(layout.encoded_length()), config_.surrogate,
                                  rng_);
}

double Explorer::cost_of(const CandidateConfig& config) const {
    Topology t = build_topology(*layout_, config, target_.input, target_.num_classes);
    return total_cost(cnn_counts(t), config_.costs);
}

Explorer::StepOutcome Explorer::step() { return step_with(*evaluator_); }

Explorer::StepOutcome Explorer::step_with(Evaluator& evaluator) {
    if (evaluated_.size() >= layout_->size())
        throw StallError("stall: design space exhausted, all " +
                         std::to_string(layout_->size()) + " configs evaluated");

    StepOutcome out;
    std::uint64_t proposals = 0;
    std::uint64_t consecutive_rejects = 0;
    // Accepted duplicates reset the rejection counter but still consume the
    // overall budget, so a walk trapped among evaluated configs terminates.
    const std::uint64_t proposal_budget = 100 * config_.proposal_cap;
    const bool first = iteration_ == 0;

    auto stall = [&](const std::string& why) {
        std::ostringstream os;
        os << "stall: " << why << " after " << consecutive_rejects
           << " consecutive rejections (iteration=" << iteration_
           << ", front=" << front_.size() << " points, training=" << training_.size()
           << ", proposals this step=" << proposals << ")";
        return StallError(os.str());
    };

    Candidate cand;
    EvaluationResult result;
    for (;;) {
        cand.config = first ? layout_->sample_uniform(rng_)
                            : layout_->propose(center_, config_.sigma, config_.p_cat, rng_);
        if (++proposals > proposal_budget) throw stall("proposal budget exhausted");

        try {
            cand.cost = cost_of(cand.config);
        } catch (const InfeasibleTopologyError&) {
            if (++consecutive_rejects >= config_.proposal_cap)
                throw stall("only infeasible candidates");
            continue;
        }
        cand.encoded.resize(layout_->encoded_length());
        layout_->encode_into(cand.config, cand.encoded);
        cand.predicted = std::clamp(model_.predict(cand.encoded, workspace_), 0.0, 1.0);

        if (!first) {
            // Iteration 1 is always evaluated; later iterations follow the
            // alpha rule against the front of measured points.
            ObjectivePoint predicted_point{cand.predicted, cand.cost, std::string()};
            if (!decide(predicted_point, front_, config_.alpha, rng_)) {
                if (++consecutive_rejects >= config_.proposal_cap) throw stall("no acceptance");
                continue;
            }
            consecutive_rejects = 0;
            cand.key = layout_->canonical_key(cand.config);
            if (evaluated_.contains(cand.key)) {
                // Accepted duplicate: served from cache, walk moves, but the
                // training set (and so the iteration count) does not grow.
                center_ = cand.config;
                continue;
            }
        } else {
            cand.key = layout_->canonical_key(cand.config);
        }

        try {
            result = evaluator.evaluate(cand.config);
        } catch (const EvaluatorError& e) {
            out.failures.push_back({iteration_, cand.key, e.what()});
            if (++consecutive_rejects >= config_.proposal_cap)
                throw stall("evaluator kept failing");
            continue;
        }
        if (!(result.error >= 0.0 && result.error <= 1.0)) {
            out.failures.push_back({iteration_, cand.key,
                                    "evaluator returned error outside [0, 1]"});
            if (++consecutive_rejects >= config_.proposal_cap)
                throw stall("evaluator kept failing");
            continue;
        }
        break;
    }

    training_.add(cand.encoded, result.error);
    front_.insert({result.error, cand.cost, cand.key});
    fit(model_, training_, config_.surrogate, rng_);
    center_ = cand.config;
    evaluated_.insert(cand.key);
    ++iteration_;

    IterationRecord& rec = out.record;
    rec.iteration = iteration_;
    rec.config_id = cand.key;
    rec.encoded = std::move(cand.encoded);
    rec.predicted = cand.predicted;
    rec.measured = result.error;
    rec.cost = cand.cost;
    rec.proposals = proposals;
    for (const auto& p : front_.points()) rec.front_ids.push_back(p.config_id);
    return out;
}

json Explorer::checkpoint_json() const {
    json j;
    j["type"] = "checkpoint";
    j["iter"] = iteration_;
    j["rng"] = rng_.save_state();
    j["center"] = iteration_ > 0 ? json(layout_->canonical_key(center_)) : json();
    j["model"] = model_.to_json();
    return j;
}

namespace {

// Serves logged outcomes during resume replay so nothing is re-evaluated.
class ReplayEvaluator final : public Evaluator {
public:
    ReplayEvaluator(const SpaceLayout& layout, const std::vector<json>& events)
        : layout_(layout), events_(events) {}

    EvaluationResult evaluate(const CandidateConfig& config) override {
        std::string key = layout_.canonical_key(config);
        if (cursor_ >= events_.size())
            throw ResumeError("replay: evaluation of '" + key + "' has no logged event");
        const json& ev = events_[cursor_++];
        std::string type = ev.at("type").get<std::string>();
        if (ev.at("id").get<std::string>() != key)
            throw ResumeError("replay: log diverges (expected '" +
                              ev.at("id").get<std::string>() + "', regenerated '" + key + "')");
        if (type == "eval_error") throw EvaluatorError(ev.at("message").get<std::string>());
        EvaluationResult r;
        r.error = ev.at("measured").get<double>();
        return r;
    }
    std::string name() const override { return "replay"; }

private:
    const SpaceLayout& layout_;
    const std::vector<json>& events_;
    std::size_t cursor_ = 0;
};

} // namespace

Explorer Explorer::resume(const SpaceLayout& layout, Evaluator& evaluator,
                          const EvalTarget& target, const DseConfig& config,
                          const ExplorationLog& log) {
    Explorer ex(layout, evaluator, target, config);
    if (log.records.empty()) return ex;

    if (log.checkpoint &&
        log.checkpoint->at("iter").get<int>() == static_cast<int>(log.records.size())) {
        const json& cp = *log.checkpoint;
        ex.model_ = RegressorModel::from_json(cp.at("model"));
        ex.rng_.restore_state(cp.at("rng").get<std::string>());
        ex.center_ = layout.config_from_key(cp.at("center").get<std::string>());
        for (const auto& rec : log.records) {
            ex.training_.add(rec.encoded, rec.measured);
            ex.front_.insert({rec.measured, rec.cost, rec.config_id});
            ex.evaluated_.insert(rec.config_id);
        }
        ex.iteration_ = static_cast<int>(log.records.size());
        return ex;
    }

    // No usable checkpoint: replay the logged iterations deterministically.
    ReplayEvaluator replay(layout, log.events);
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        StepOutcome out = ex.step_with(replay);
        if (out.record.to_json() != log.records[i].to_json())
            throw ResumeError("replay: regenerated iteration " +
                              std::to_string(out.record.iteration) +
                              " does not match the log (last valid record: iteration " +
                              std::to_string(i) + ")");
    }
    return ex;
}

namespace {

json failure_to_json(const EvalFailure& f) {
    json j;
    j["type"] = "eval_error";
    j["after_iter"] = f.after_iteration;
    j["id"] = f.config_id;
    j["message"] = f.message;
    return j;
}

void write_run_csvs(const std::filesystem::path& out_dir, const ExplorationLog& log,
                    const ParetoFront& front) {
    {
        std::ofstream os(out_dir / "front.csv");
        write_front_csv(os, front);
    }
    {
        std::ofstream os(out_dir / "points.csv");
        os << "iteration,config_id,error,cost\n";
        os.precision(17);
        for (const auto& r : log.records)
            os << r.iteration << ',' << r.config_id << ',' << r.measured << ',' << r.cost << '\n';
    }
    {
        std::ofstream os(out_dir / "rsm_error.csv");
        os << "iteration,predicted,measured,abs_error\n";
        os.precision(17);
        for (const auto& r : log.records)
            os << r.iteration << ',' << r.predicted << ',' << r.measured << ','
               << std::fabs(r.predicted - r.measured) << '\n';
    }
}

} // namespace

ExplorationLog run_exploration(const SpaceLayout& layout, Evaluator& evaluator,
                               const EvalTarget& target, const DseConfig& config,
                               const std::filesystem::path& out_dir, const json& extra_header) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    ExplorationLog log;
    log.header["type"] = "header";
    log.header["schema"] = "nndse.log.v1";
    log.header["dse"] = config.to_json();
    log.header["space"] = json::parse(space_to_json(layout.space()));
    log.header["target"] = {{"channels", target.input.channels},
                            {"height", target.input.height},
                            {"width", target.input.width},
                            {"classes", target.num_classes},
                            {"train",
                             {{"activation", target.train.activation},
                              {"algorithm", target.train.algorithm},
                              {"batch_size", target.train.batch_size},
                              {"epochs", target.train.epochs}}}};
    log.header["evaluator"] = evaluator.name();
    for (auto it = extra_header.begin(); it != extra_header.end(); ++it)
        log.header[it.key()] = it.value();

    std::ofstream os(out_dir / "log.jsonl", std::ios::trunc);
    if (!os) throw FormatError("cannot create " + (out_dir / "log.jsonl").string());
    os << log.header.dump() << '\n';
    os.flush();

    Explorer ex(layout, evaluator, target, config);
    while (ex.iteration() < config.max_iterations) {
        Explorer::StepOutcome out = ex.step();
        for (const auto& f : out.failures) {
            log.failures.push_back(f);
            os << failure_to_json(f).dump() << '\n';
        }
        log.records.push_back(out.record);
        os << out.record.to_json().dump() << '\n';
        os.flush();
    }
    log.checkpoint = ex.checkpoint_json();
    os << log.checkpoint->dump() << '\n';
    os.flush();

    write_run_csvs(out_dir, log, ex.front());
    return log;
}

ExplorationLog read_log(const std::filesystem::path& log_file) {
    std::ifstream in(log_file, std::ios::binary);
    if (!in) throw ResumeError("cannot open " + log_file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    std::string content = ss.str();

    ExplorationLog log;
    std::size_t pos = 0;
    int lineno = 0;
    bool have_header = false;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) break; // trailing partial line
        std::string_view line(content.data() + pos, nl - pos);
        ++lineno;
        std::size_t line_end = nl + 1;

        json j;
        bool parsed = true;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            parsed = false;
        }
        if (!parsed || !j.contains("type")) {
            // Damaged line: tolerable only as trailing garbage.
            std::size_t rest = content.find('\n', line_end);
            bool has_later_complete = rest != std::string::npos;
            if (has_later_complete)
                throw ResumeError(log_file.string() + ": corrupt record at line " +
                                  std::to_string(lineno) + " (last valid record: iteration " +
                                  std::to_string(log.records.size()) + ")");
            break;
        }
        std::string type = j.at("type").get<std::string>();
        if (type == "header") {
            if (have_header)
                throw ResumeError(log_file.string() + ": duplicate header at line " +
                                  std::to_string(lineno));
            have_header = true;
            log.header = std::move(j);
            log.valid_byte_length = line_end;
        } else if (!have_header) {
            throw ResumeError(log_file.string() + ": first line is not a header");
        } else if (type == "iteration") {
            log.records.push_back(IterationRecord::from_json(j));
            log.events.push_back(std::move(j));
            log.valid_byte_length = line_end;
        } else if (type == "eval_error") {
            EvalFailure f;
            f.after_iteration = j.at("after_iter").get<int>();
            f.config_id = j.at("id").get<std::string>();
            f.message = j.at("message").get<std::string>();
            log.failures.push_back(std::move(f));
            log.events.push_back(std::move(j));
            // Not a resume point by itself; covered once a later record lands.
        } else if (type == "checkpoint") {
            log.checkpoint = std::move(j);
            log.valid_byte_length = line_end;
        } else {
            throw ResumeError(log_file.string() + ": unknown record type '" + type +
                              "' at line " + std::to_string(lineno));
        }
        pos = line_end;
    }
    if (!have_header) throw ResumeError(log_file.string() + ": missing header");

    // Drop events that sit past the resumable prefix (trailing failures).
    while (!log.events.empty()) {
        const json& last = log.events.back();
        if (last.at("type").get<std::string>() == "iteration") break;
        log.failures.pop_back();
        log.events.pop_back();
    }
    // Checkpoint older than the record tail is unusable.
    if (log.checkpoint &&
        log.checkpoint->at("iter").get<int>() != static_cast<int>(log.records.size()))
        log.checkpoint.reset();
    return log;
}

ExplorationLog resume_exploration(const SpaceLayout& layout, Evaluator& evaluator,
                                  const std::filesystem::path& out_dir,
                                  std::optional<int> max_iterations) {
    const auto log_file = out_dir / "log.jsonl";
    ExplorationLog log = read_log(log_file);

    DseConfig config = DseConfig::from_json(log.header.at("dse"));
    EvalTarget target;
    const json& t = log.header.at("target");
    target.input = {t.at("channels").get<int>(), t.at("height").get<int>(),
                    t.at("width").get<int>()};
    target.num_classes = t.at("classes").get<int>();
    target.train.activation = t.at("train").at("activation").get<std::string>();
    target.train.algorithm = t.at("train").at("algorithm").get<std::string>();
    target.train.batch_size = t.at("train").at("batch_size").get<int>();
    target.train.epochs = t.at("train").at("epochs").get<int>();
    if (max_iterations) {
        config.max_iterations = *max_iterations;
        config.validate();
    }

    Explorer ex = Explorer::resume(layout, evaluator, target, config, log);

    // Shed any trailing partial line before appending.
    if (std::filesystem::file_size(log_file) != log.valid_byte_length)
        std::filesystem::resize_file(log_file, log.valid_byte_length);

    std::ofstream os(log_file, std::ios::app);
    if (!os) throw FormatError("cannot append to " + log_file.string());
    bool appended = false;
    while (ex.iteration() < config.max_iterations) {
        Explorer::StepOutcome out = ex.step();
        for (const auto& f : out.failures) {
            log.failures.push_back(f);
            os << failure_to_json(f).dump() << '\n';
        }
        log.records.push_back(out.record);
        os << out.record.to_json().dump() << '\n';
        os.flush();
        appended = true;
    }
    if (appended || !log.checkpoint) {
        log.checkpoint = ex.checkpoint_json();
        os << log.checkpoint->dump() << '\n';
        os.flush();
    }

    write_run_csvs(out_dir, log, ex.front());
    return log;
}

ExhaustiveResult exhaustive(const SpaceLayout& layout, Evaluator& evaluator,
                            const EvalTarget& target, const CostParams& costs,
                            std::uint64_t ceiling, int workers) {
    std::uint64_t n = layout.size();
    if (n > ceiling)
        throw ValidationError("exhaustive: space size " + std::to_string(n) +
                              " exceeds ceiling " + std::to_string(ceiling));
    if (workers < 1) workers = 1;

    std::vector<CandidateConfig> configs;
    configs.reserve(n);
    layout.enumerate([&](const CandidateConfig& c) { configs.push_back(c); });

    struct Slot {
        bool ok = false;
        ObjectivePoint point;
    };
    std::vector<Slot> results(configs.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<std::size_t> infeasible{0};
    std::atomic<std::size_t> failures{0};

    auto work = [&]() {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= configs.size()) return;
            std::string key = layout.canonical_key(configs[i]);
            double cost;
            try {
                Topology t = build_topology(layout, configs[i], target.input, target.num_classes);
                cost = total_cost(cnn_counts(t), costs);
            } catch (const InfeasibleTopologyError&) {
                infeasible.fetch_add(1);
                continue;
            }
            try {
                EvaluationResult r = evaluator.evaluate(configs[i]);
                results[i] = {true, {r.error, cost, std::move(key)}};
            } catch (const EvaluatorError&) {
                failures.fetch_add(1);
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    ExhaustiveResult out;
    out.infeasible = infeasible.load();
    out.failures = failures.load();
    out.all.reserve(configs.size());
    for (auto& s : results)
        if (s.ok) out.all.push_back(std::move(s.point));
    out.front = front_of(out.all);
    return out;
}

std::vector<std::pair<int, double>> adrs_curve(const std::vector<IterationRecord>& records,
                                               const ParetoFront& reference) {
    if (reference.empty()) throw ValidationError("adrs_curve: reference front is empty");
    std::vector<std::pair<int, double>> series;
    ParetoFront growing;
    for (const auto& r : records) {
        growing.insert({r.measured, r.cost, r.config_id});
        series.emplace_back(r.iteration, adrs(reference, growing));
    }
    return series;
}

} // namespace nndse
