#include "augbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace augbound {

namespace {

constexpr double kVacuityEps = 1e-12;
const double kNan = std::numeric_limits<double>::quiet_NaN();

void push_term(BoundReport& report, const std::string& name, const TermInput& term) {
    report.terms.push_back({name, term.value, term.std_error, term.provenance});
}

void push_term(BoundReport& report, const std::string& name, double value,
               const std::string& provenance) {
    report.terms.push_back({name, value, std::nullopt, provenance});
}

void finalize(BoundReport& report, const std::optional<TermInput>& sup_risk, double rhs) {
    report.rhs = rhs;
    if (sup_risk) {
        push_term(report, "sup_risk", *sup_risk);
        report.lhs = sup_risk->value;
    } else {
        report.lhs = kNan;
    }
    report.slack = report.rhs - report.lhs;
}

// (1/(1-tau)) [unsup - tau*col + min + coef*max]; returns NaN when vacuous.
double scaled_rhs(const BoundInputs& in, double max_coefficient, bool& vacuous) {
    vacuous = in.tau_k >= 1.0 - kVacuityEps;
    if (vacuous) return kNan;
    const double inner = in.unsup_risk.value - in.tau_k * in.collision_term +
                         in.min_term.value + max_coefficient * in.max_term.value;
    return inner / (1.0 - in.tau_k);
}

void push_common_terms(BoundReport& report, const BoundInputs& in) {
    push_term(report, "unsup_risk", in.unsup_risk);
    push_term(report, "tau_k", in.tau_k, "analytic");
    push_term(report, "collision_term", in.collision_term, "analytic");
    push_term(report, "min_term", in.min_term);
    push_term(report, "max_term", in.max_term);
}

}  // namespace

nlohmann::json BoundReport::to_json() const {
    nlohmann::json terms_json = nlohmann::json::array();
    for (const auto& term : terms) {
        nlohmann::json t = {{"name", term.name},
                            {"value", term.value},
                            {"provenance", term.provenance}};
        if (term.std_error) t["std_error"] = *term.std_error;
        terms_json.push_back(std::move(t));
    }
    nlohmann::json flags_json = nlohmann::json::object();
    for (const auto& [name, value] : flags) flags_json[name] = value;
    return {{"theorem", theorem}, {"terms", terms_json}, {"lhs", lhs},
            {"rhs", rhs},         {"slack", slack},      {"vacuous", vacuous},
            {"flags", flags_json}};
}

BoundReport bound_thm1(const BoundInputs& in) {
    BoundReport report;
    report.theorem = "error_bound";
    push_common_terms(report, in);
    const double rhs = scaled_rhs(in, 5.0, report.vacuous);
    report.flags["vacuous_tau"] = report.vacuous;
    finalize(report, in.sup_risk, rhs);
    return report;
}

BoundReport bound_thm2(const BoundInputs& in, const std::vector<double>& centering_residuals,
                       double residual_tolerance) {
    BoundReport report;
    report.theorem = "error_bound_improved";
    push_common_terms(report, in);
    double max_residual = 0.0;
    for (double r : centering_residuals) max_residual = std::max(max_residual, r);
    push_term(report, "max_centering_residual", max_residual, "mc");
    const bool centered = !centering_residuals.empty() && max_residual <= residual_tolerance;
    report.flags["centering_checked"] = !centering_residuals.empty();
    report.flags["centering_within_tolerance"] = centered;
    const double rhs = scaled_rhs(in, 1.0, report.vacuous);
    report.flags["vacuous_tau"] = report.vacuous;
    finalize(report, in.sup_risk, rhs);
    return report;
}

BoundReport bound_thm3(const BoundInputs& in, const GeneralizationInputs& gen) {
    if (gen.n < 1) throw std::invalid_argument("bound_thm3: n must be >= 1");
    if (!(gen.delta > 0.0 && gen.delta < 1.0))
        throw std::invalid_argument("bound_thm3: delta must be in (0,1)");
    BoundReport report;
    report.theorem = "generalization_bound";
    push_common_terms(report, in);

    const double complexity = 12.0 * gen.embedding_radius * gen.rademacher / gen.n;
    // concentration radical uses log(2/delta)
    const double concentration =
        3.0 * gen.loss_bound * std::sqrt(std::log(2.0 / gen.delta) / (2.0 * gen.n));
    report.terms.push_back({"rademacher", gen.rademacher,
                            gen.rademacher_std_error > 0.0
                                ? std::optional<double>(gen.rademacher_std_error)
                                : std::nullopt,
                            "mc"});
    push_term(report, "complexity_term", complexity, "analytic");
    push_term(report, "concentration_term", concentration, "analytic");
    push_term(report, "loss_bound", gen.loss_bound, "analytic");

    report.vacuous = in.tau_k >= 1.0 - kVacuityEps;
    report.flags["vacuous_tau"] = report.vacuous;
    double rhs = kNan;
    if (!report.vacuous) {
        const double inner = in.unsup_risk.value + complexity + concentration -
                             in.tau_k * in.collision_term + in.min_term.value +
                             5.0 * in.max_term.value;
        rhs = inner / (1.0 - in.tau_k);
    }
    finalize(report, in.sup_risk, rhs);
    return report;
}

BoundReport bound_thm6(const BoundInputs& in, double lipschitz,
                       std::optional<double> centering_residual, double residual_tolerance) {
    if (lipschitz < 0.0) throw std::invalid_argument("bound_thm6: lipschitz must be >= 0");
    BoundReport report;
    report.theorem = "pixel_error_bound";
    push_term(report, "unsup_risk", in.unsup_risk);
    push_term(report, "tau_k", in.tau_k, "analytic");
    push_term(report, "collision_term", in.collision_term, "analytic");
    push_term(report, "pixel_min_term", in.min_term);
    push_term(report, "pixel_max_term", in.max_term);
    push_term(report, "lipschitz", lipschitz, "estimate");
    if (centering_residual) push_term(report, "centering_residual", *centering_residual, "mc");

    report.flags["lipschitz_estimated"] = true;
    report.flags["centering_checked"] = centering_residual.has_value();
    report.flags["centering_within_tolerance"] =
        centering_residual.has_value() && *centering_residual <= residual_tolerance;

    report.vacuous = in.tau_k >= 1.0 - kVacuityEps;
    report.flags["vacuous_tau"] = report.vacuous;
    double rhs = kNan;
    if (!report.vacuous) {
        const double inner = in.unsup_risk.value - in.tau_k * in.collision_term +
                             lipschitz * in.min_term.value + lipschitz * in.max_term.value;
        rhs = inner / (1.0 - in.tau_k);
    }
    finalize(report, in.sup_risk, rhs);
    return report;
}

double analytic_crop_bound(const GenerativeConfig& config, const CropStats& stats,
                           bool with_color) {
    config.validate();
    std::vector<int> present = stats.present_semantics;
    if (present.empty()) {
        present.resize(static_cast<std::size_t>(config.num_semantics));
        for (int t = 0; t < config.num_semantics; ++t) present[static_cast<std::size_t>(t)] = t;
    }
    double sigma = 0.0;
    for (int s : present) sigma = std::max(sigma, analytic_sigma(config, s, config.side));
    double bound = with_color ? sigma : 2.0 * sigma;
    if (!stats.single_semantic && stats.offmax_pixel_count > 0) {
        const double delta_mu = max_pairwise_delta_mu(config, present);
        bound += std::sqrt(static_cast<double>(stats.offmax_pixel_count)) * delta_mu;
    }
    return bound;
}

}  // namespace augbound
