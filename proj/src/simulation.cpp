#include "clicktrimap/simulation.hpp"

namespace clicktrimap {

std::string_view to_string(Policy p)
{
    switch (p) {
    case Policy::TwoClass:
        return "twoclass";
    case Policy::Itts:
        return "itts";
    case Policy::Cups:
        return "cups";
    }
    return "?";
}

Policy policy_from_string(std::string_view s)
{
    if (s == "twoclass") {
        return Policy::TwoClass;
    }
    if (s == "itts") {
        return Policy::Itts;
    }
    if (s == "cups") {
        return Policy::Cups;
    }
    throw InvalidInput("unknown policy '" + std::string(s) + "' (expected twoclass, itts or cups)");
}

namespace {

BinaryMask target_mask(const Trimap& gt)
{
    BinaryMask m(gt.width(), gt.height());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        m[i] = gt[i] != LabelClass::Background ? 1 : 0;
    }
    return m;
}

void finish_report(ErrorReport& r, double d_t)
{
    r.d_max = std::max({r.d[0], r.d[1], r.d[2]});
    r.d_t = d_t;
    r.e_level = r.d_max / r.d_t;
}

Trimap collapse_two_class(const Trimap& t)
{
    Trimap out(t.width(), t.height());
    for (std::size_t i = 0; i < t.size(); ++i) {
        out[i] = t[i] == LabelClass::Background ? LabelClass::Background : LabelClass::Foreground;
    }
    return out;
}

} // namespace

ErrorReport compute_error_report(const Trimap& pred, const Trimap& gt)
{
    require_same_shape(pred, gt, "compute_error_report");
    const double d_t = max_of(distance_transform(target_mask(gt)));
    if (d_t <= 0.0) {
        throw InvalidInput("compute_error_report: empty target (ground truth has no foreground "
                           "or unknown pixel)");
    }
    ErrorReport r;
    for (LabelClass c : kAllClasses) {
        const std::size_t k = index_of(c);
        r.fn_masks[k] = mask_and(mask_not(trimap_to_mask(pred, c)), trimap_to_mask(gt, c));
        r.d[k] = max_of(distance_transform(r.fn_masks[k]));
    }
    finish_report(r, d_t);
    return r;
}

LabelClass itts_next_class(const ErrorReport& r)
{
    if (r.converged()) {
        throw InvalidInput("itts_next_class: report is converged (no false negatives)");
    }
    LabelClass best = LabelClass::Foreground;
    for (LabelClass c : kAllClasses) {
        if (r.d[index_of(c)] > r.d[index_of(best)]) {
            best = c;
        }
    }
    return best;
}

LabelClass cups_next_class(const ErrorReport& r, const SimulationConfig& cfg)
{
    if (r.converged()) {
        throw InvalidInput("cups_next_class: report is converged (no false negatives)");
    }
    if (r.e_level < cfg.alpha_threshold &&
        r.d[index_of(LabelClass::Unknown)] > cfg.beta_threshold) {
        return LabelClass::Unknown;
    }
    return itts_next_class(r);
}

Click sample_click(const ErrorReport& r, LabelClass c, int ordinal)
{
    const BinaryMask& fn = r.fn_masks[index_of(c)];
    if (count_true(fn) == 0) {
        throw InvalidInput("sample_click: empty false-negative region for class " +
                           std::string(to_string(c)));
    }
    const PixelPos p = argmax_pixel(distance_transform(fn));
    return Click{p.x, p.y, c, ordinal};
}

Click sample_click_random(const ErrorReport& r, LabelClass c, int ordinal, std::mt19937_64& rng)
{
    const BinaryMask& fn = r.fn_masks[index_of(c)];
    const std::size_t n = count_true(fn);
    if (n == 0) {
        throw InvalidInput("sample_click_random: empty false-negative region for class " +
                           std::string(to_string(c)));
    }
    std::size_t pick = static_cast<std::size_t>(rng() % n);
    for (std::size_t i = 0; i < fn.size(); ++i) {
        if (fn[i] && pick-- == 0) {
            return Click{static_cast<int>(i % static_cast<std::size_t>(fn.width())),
                         static_cast<int>(i / static_cast<std::size_t>(fn.width())), c, ordinal};
        }
    }
    throw std::logic_error("sample_click_random: unreachable");
}

StepOutcome simulate_step(const Trimap& pred, const Trimap& gt, const SimulationConfig& cfg,
                          Policy policy, int ordinal, ClickPlacement placement,
                          std::mt19937_64* rng)
{
    if (placement == ClickPlacement::UniformRandom && rng == nullptr) {
        throw InvalidInput("simulate_step: random placement requires an rng");
    }
    StepOutcome out;
    LabelClass cls = LabelClass::Foreground;
    if (policy == Policy::TwoClass) {
        out.report = compute_error_report(collapse_two_class(pred), collapse_two_class(gt));
        if (out.report.converged()) {
            return out;
        }
        cls = itts_next_class(out.report);
    } else {
        out.report = compute_error_report(pred, gt);
        if (out.report.converged()) {
            return out;
        }
        cls = policy == Policy::Cups ? cups_next_class(out.report, cfg)
                                     : itts_next_class(out.report);
    }
    out.decision.next = placement == ClickPlacement::Center
                            ? sample_click(out.report, cls, ordinal)
                            : sample_click_random(out.report, cls, ordinal, *rng);
    return out;
}

nlohmann::json trajectory_record(const Click& click, Policy policy, const ErrorReport& r)
{
    return nlohmann::json{{"ordinal", click.ordinal},
                          {"policy", std::string(to_string(policy))},
                          {"class", std::string(1, to_letter(click.label))},
                          {"x", click.x},
                          {"y", click.y},
                          {"d_F", r.d[index_of(LabelClass::Foreground)]},
                          {"d_B", r.d[index_of(LabelClass::Background)]},
                          {"d_U", r.d[index_of(LabelClass::Unknown)]},
                          {"d_t", r.d_t},
                          {"e_level", r.e_level}};
}

} // namespace clicktrimap
