#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "augbound/pixel_model.hpp"

namespace augbound {

struct BoundTerm {
    std::string name;
    double value = 0.0;
    std::optional<double> std_error;
    std::string provenance;  // "analytic" | "mc" | "exhaustive" | "estimate" | "input"
};

// One theorem's inequality, fully materialized: every named term, both sides,
// the slack, and flags recording which assumptions were actually checked.
struct BoundReport {
    std::string theorem;
    std::vector<BoundTerm> terms;
    double lhs = 0.0;   // NaN when no supervised-risk estimate was supplied
    double rhs = 0.0;
    double slack = 0.0; // rhs - lhs
    bool vacuous = false;
    std::map<std::string, bool> flags;

    nlohmann::json to_json() const;
};

struct TermInput {
    double value = 0.0;
    std::optional<double> std_error;
    std::string provenance = "input";
};

struct BoundInputs {
    TermInput unsup_risk;       // R_un (thm 1/2/6) or empirical R_un (thm 3)
    double tau_k = 0.0;
    double collision_term = 0.0;  // E log(Col+1)
    TermInput min_term;         // embedding-level for thm 1/2/3, pixel-level for thm 6
    TermInput max_term;
    std::optional<TermInput> sup_risk;  // LHS estimate when available
};

// RHS = (1/(1-tau)) [R_un - tau*col + min + 5*max]
BoundReport bound_thm1(const BoundInputs& in);

// Same with coefficient 1 on the max term; valid only under the centered-
// representation assumption, recorded via the measured residuals.
BoundReport bound_thm2(const BoundInputs& in, const std::vector<double>& centering_residuals,
                       double residual_tolerance);

struct GeneralizationInputs {
    double rademacher = 0.0;
    double rademacher_std_error = 0.0;
    double embedding_radius = 1.0;  // R
    double loss_bound = 0.0;        // B
    int n = 1;
    double delta = 0.05;
};

// RHS adds 12 R Rad / n and 3 B sqrt(log(2/delta) / (2n)) to the thm-1 form.
BoundReport bound_thm3(const BoundInputs& in, const GeneralizationInputs& gen);

// Pixel-level form: distance terms scaled by the Lipschitz estimate, max
// coefficient 1; requires both the centering and Lipschitz assumptions.
BoundReport bound_thm6(const BoundInputs& in, double lipschitz,
                       std::optional<double> centering_residual, double residual_tolerance);

struct CropStats {
    bool single_semantic = true;
    int offmax_pixel_count = 0;          // pixels of the crop off the majority semantic
    std::vector<int> present_semantics;  // empty = all semantics considered
};

// Analytic pixel-level bound on the minimum same-class different-image
// distance under resized crops: 2*sigma for single-semantic crops (sigma with
// brightness gains), plus sqrt(offmax_count) * max pairwise delta-mu when the
// crop spans several semantics. sigma is the largest analytic sigma among the
// present semantics.
double analytic_crop_bound(const GenerativeConfig& config, const CropStats& stats,
                           bool with_color);

}  // namespace augbound
