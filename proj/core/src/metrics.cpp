#include "fluxcast/metrics.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fluxcast/errors.hpp"

namespace fluxcast::eval {

namespace {

void require_pairs(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("metric: vector lengths disagree");
    if (a.empty()) throw DataError("metric: zero valid pairs");
}

// Collects the valid pairs of one column (task) or all columns (task < 0).
void collect(const num::Matrix& preds, const num::Matrix& targets,
             const num::Matrix& mask, long task, std::vector<double>& p,
             std::vector<double>& t) {
    if (!preds.same_shape(targets) || !preds.same_shape(mask))
        throw ShapeError("metric: matrix shapes disagree");
    for (std::size_t i = 0; i < preds.rows(); ++i)
        for (std::size_t j = 0; j < preds.cols(); ++j) {
            if (task >= 0 && static_cast<std::size_t>(task) != j) continue;
            if (mask(i, j) == 0.0) continue;
            p.push_back(preds(i, j));
            t.push_back(targets(i, j));
        }
}

} // namespace

double mse(const std::vector<double>& preds, const std::vector<double>& targets) {
    require_pairs(preds, targets);
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double e = preds[i] - targets[i];
        s += e * e;
    }
    return s / static_cast<double>(preds.size());
}

double mae(const std::vector<double>& preds, const std::vector<double>& targets) {
    require_pairs(preds, targets);
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += std::fabs(preds[i] - targets[i]);
    return s / static_cast<double>(preds.size());
}

double mape(const std::vector<double>& preds, const std::vector<double>& targets) {
    require_pairs(preds, targets);
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        s += std::fabs(preds[i] - targets[i]) /
             std::max(std::fabs(targets[i]), kMapeEpsilon);
    return 100.0 * s / static_cast<double>(preds.size());
}

double rmae(const std::vector<double>& preds, const std::vector<double>& targets) {
    require_pairs(preds, targets);
    double denom = 0.0;
    for (double y : targets) denom += std::fabs(y);
    denom /= static_cast<double>(targets.size());
    if (denom < 1e-300) denom = kMapeEpsilon;
    return mae(preds, targets) / denom;
}

#define FLUXCAST_MASKED_METRIC(NAME)                                              \
    double NAME(const num::Matrix& preds, const num::Matrix& targets,             \
                const num::Matrix& mask) {                                        \
        std::vector<double> p, t;                                                 \
        collect(preds, targets, mask, -1, p, t);                                  \
        if (p.empty()) throw DataError("metric: zero valid pairs");               \
        return NAME(p, t);                                                        \
    }

FLUXCAST_MASKED_METRIC(mse)
FLUXCAST_MASKED_METRIC(mae)
FLUXCAST_MASKED_METRIC(mape)
FLUXCAST_MASKED_METRIC(rmae)

#undef FLUXCAST_MASKED_METRIC

MetricsReport build_report(const num::Matrix& preds, const num::Matrix& targets,
                           const num::Matrix& mask) {
    MetricsReport report;
    std::size_t k = preds.cols();
    report.per_task.resize(k);
    double wsum = 0.0;
    for (std::size_t task = 0; task < k; ++task) {
        std::vector<double> p, t;
        collect(preds, targets, mask, static_cast<long>(task), p, t);
        TaskMetrics& tm = report.per_task[task];
        tm.count = p.size();
        if (p.empty()) continue;
        tm.mse = mse(p, t);
        tm.mae = mae(p, t);
        tm.mape = mape(p, t);
        tm.rmae = rmae(p, t);
        double w = static_cast<double>(tm.count);
        report.aggregate.count += tm.count;
        report.aggregate.mse += w * tm.mse;
        report.aggregate.mae += w * tm.mae;
        report.aggregate.mape += w * tm.mape;
        report.aggregate.rmae += w * tm.rmae;
        wsum += w;
    }
    if (wsum == 0.0) throw DataError("metric: zero valid pairs");
    report.aggregate.mse /= wsum;
    report.aggregate.mae /= wsum;
    report.aggregate.mape /= wsum;
    report.aggregate.rmae /= wsum;
    return report;
}

namespace {

nlohmann::json task_to_json(const TaskMetrics& tm) {
    return {{"count", tm.count}, {"mse", tm.mse},   {"mae", tm.mae},
            {"mape", tm.mape},   {"rmae", tm.rmae}};
}

TaskMetrics task_from_json(const nlohmann::json& j) {
    TaskMetrics tm;
    tm.count = j.at("count").get<std::size_t>();
    tm.mse = j.at("mse").get<double>();
    tm.mae = j.at("mae").get<double>();
    tm.mape = j.at("mape").get<double>();
    tm.rmae = j.at("rmae").get<double>();
    return tm;
}

} // namespace

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["config_fingerprint"] = report.config_fingerprint;
    j["seed"] = report.seed;
    j["normalized_scale"] = report.normalized_scale;
    j["rmae_definition"] = report.rmae_definition;
    j["mape_epsilon"] = report.mape_epsilon;
    j["aggregate"] = task_to_json(report.aggregate);
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& tm : report.per_task) tasks.push_back(task_to_json(tm));
    j["per_task"] = tasks;
    return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MetricsReport report;
    report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.normalized_scale = j.at("normalized_scale").get<bool>();
    report.rmae_definition = j.at("rmae_definition").get<std::string>();
    report.mape_epsilon = j.at("mape_epsilon").get<double>();
    report.aggregate = task_from_json(j.at("aggregate"));
    for (const auto& tj : j.at("per_task")) report.per_task.push_back(task_from_json(tj));
    return report;
}

std::string report_to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "task,count,mse,mae,mape,rmae\n";
    for (std::size_t i = 0; i < report.per_task.size(); ++i) {
        const auto& tm = report.per_task[i];
        out << i << ',' << tm.count << ',' << tm.mse << ',' << tm.mae << ','
            << tm.mape << ',' << tm.rmae << '\n';
    }
    const auto& ag = report.aggregate;
    out << "aggregate," << ag.count << ',' << ag.mse << ',' << ag.mae << ','
        << ag.mape << ',' << ag.rmae << '\n';
    return out.str();
}

} // namespace fluxcast::eval
