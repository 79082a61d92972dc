#pragma once

#include <cmath>

#include "json.hpp"
#include "rvrec/measures.hpp"
#include "rvrec/render.hpp"
#include "rvrec/trend.hpp"

namespace rvrec {

struct LossReport {
    ComponentLosses identification;
    ComponentLosses comparison;
    TrendLoss trend;
};

inline LossReport evaluate(const RenderedView& source, const RenderedView& target, const PerceptualKernel& kernel = {}) {
    return {identification_loss(source, target), comparison_loss(source, target, kernel), trend_loss(source, target)};
}

namespace detail {

/// Non-finite numbers are written as null.
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json components_json(const std::map<std::string, double>& components, double total) {
    Json per = Json::object();
    for (const auto& [k, v] : components) per[k] = finite_or_null(v);
    return {{"perChannel", std::move(per)}, {"total", finite_or_null(total)}};
}

}  // namespace detail

inline Json to_json(const LossReport& r) {
    Json trend = detail::components_json(r.trend.components, r.trend.total);
    trend["infinite"] = r.trend.infinite;
    trend["degenerate"] = r.trend.degenerate;
    return {{"identification", detail::components_json(r.identification.components, r.identification.total)},
            {"comparison", detail::components_json(r.comparison.components, r.comparison.total)},
            {"trend", std::move(trend)}};
}

inline LossReport loss_report_from_json(const Json& j) {
    auto read = [](const Json& part, std::map<std::string, double>& comps, double& total) {
        for (const auto& [k, v] : part.at("perChannel").items())
            comps[k] = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
        total = part.at("total").is_null() ? std::numeric_limits<double>::infinity() : part.at("total").get<double>();
    };
    LossReport r;
    read(j.at("identification"), r.identification.components, r.identification.total);
    read(j.at("comparison"), r.comparison.components, r.comparison.total);
    read(j.at("trend"), r.trend.components, r.trend.total);
    if (j.at("trend").contains("infinite")) r.trend.infinite = j.at("trend").at("infinite").get<std::set<std::string>>();
    if (j.at("trend").contains("degenerate"))
        r.trend.degenerate = j.at("trend").at("degenerate").get<std::set<std::string>>();
    return r;
}

}  // namespace rvrec
