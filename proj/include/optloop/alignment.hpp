#pragma once

#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <optloop/five_element.hpp>  // fe_detail::trim for JSONL parsing

namespace optloop {

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

// Per-token log-probabilities of one completion under the policy and the
// reference model, with its desirability label. Log-probs are inputs here;
// no tokenization or model inference happens in this artifact.
struct ScoredCompletion {
    std::vector<double> policy_logprobs;
    std::vector<double> ref_logprobs;
    bool desirable = false;
};

struct KtoParams {
    double beta = 0.1;       // reward scale
    double lambda_d = 1.0;   // weight of desirable completions
    double lambda_u = 1.0;   // weight of undesirable completions
};

namespace align_detail {

inline void check_logprobs(std::span<const double> xs, const char* what) {
    if (xs.empty()) throw std::invalid_argument(std::string(what) + ": empty sequence");
    for (double v : xs) {
        if (!(v <= 0.0))
            throw std::invalid_argument(std::string(what) +
                                        ": log-probabilities must be <= 0");
        if (!std::isfinite(v) && v != -std::numeric_limits<double>::infinity())
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
}

inline void check_completion(const ScoredCompletion& c) {
    check_logprobs(c.policy_logprobs, "policy log-probs");
    check_logprobs(c.ref_logprobs, "reference log-probs");
    if (c.policy_logprobs.size() != c.ref_logprobs.size())
        throw std::invalid_argument("policy and reference sequences differ in length");
}

inline double sum(std::span<const double> xs) {
    double s = 0.0;
    for (double v : xs) s += v;
    return s;
}

}  // namespace align_detail

inline void check_params(const KtoParams& p) {
    if (!(p.beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (!(p.lambda_d > 0.0) || !(p.lambda_u > 0.0))
        throw std::invalid_argument("lambda weights must be > 0");
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Negative log-likelihood of one (instruction, completion) pair: the
// negated sum of per-token log-probabilities. Batch means are the caller's.
inline double sft_nll(std::span<const double> token_logprobs) {
    align_detail::check_logprobs(token_logprobs, "sft_nll");
    return -align_detail::sum(token_logprobs);
}

// Sequence-level log-ratio reward: beta * (log pi*(v|u) - log pi_ref(v|u)),
// with whole-completion log-probs summed, not averaged.
inline double kto_reward(const ScoredCompletion& c, const KtoParams& p) {
    align_detail::check_completion(c);
    check_params(p);
    return p.beta *
           (align_detail::sum(c.policy_logprobs) - align_detail::sum(c.ref_logprobs));
}

// Numerically stable logistic function.
inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Prospect-theoretic value: sigma(r - z_ref) for desirable completions,
// sigma(z_ref - r) for undesirable ones.
inline double kto_value(const ScoredCompletion& c, double z_ref, const KtoParams& p) {
    double r = kto_reward(c, p);
    return c.desirable ? logistic(r - z_ref) : logistic(z_ref - r);
}

// Reference point: a KL estimate from mismatched-completion log-probs,
// z_ref = max(0, beta * mean sequence log-ratio). The clamp keeps z_ref a
// nonnegative KL estimate.
inline double kto_reference_point(std::span<const ScoredCompletion> batch, const KtoParams& p) {
    check_params(p);
    if (batch.empty()) throw std::invalid_argument("kto_reference_point: empty batch");
    double mean = 0.0;
    for (const auto& c : batch) {
        align_detail::check_completion(c);
        mean += align_detail::sum(c.policy_logprobs) - align_detail::sum(c.ref_logprobs);
    }
    mean /= static_cast<double>(batch.size());
    return std::max(0.0, p.beta * mean);
}

inline double kto_weight(const ScoredCompletion& c, const KtoParams& p) {
    return c.desirable ? p.lambda_d : p.lambda_u;
}

// Loss with an explicit (detached) reference point.
inline double kto_loss_with_reference(std::span<const ScoredCompletion> batch, double z_ref,
                                      const KtoParams& p) {
    check_params(p);
    if (batch.empty()) throw std::invalid_argument("kto_loss: empty batch");
    double total = 0.0;
    for (const auto& c : batch) total += kto_weight(c, p) * (1.0 - kto_value(c, z_ref, p));
    return total / static_cast<double>(batch.size());
}

// Full KTO loss: mean over the batch of w(v) * (1 - value), with the
// reference point estimated from the same batch.
inline double kto_loss(std::span<const ScoredCompletion> batch, const KtoParams& p) {
    return kto_loss_with_reference(batch, kto_reference_point(batch, p), p);
}

// Analytic d loss / d policy_logprob[j] for record k, treating z_ref as a
// detached statistic. The derivative is identical for every token position
// of the record: -(w_k * s_k * beta / N) * sigma'(s_k (r_k - z_ref)).
inline double kto_loss_grad_policy(std::span<const ScoredCompletion> batch, double z_ref,
                                   const KtoParams& p, size_t record) {
    check_params(p);
    if (record >= batch.size()) throw std::invalid_argument("record index out of range");
    const ScoredCompletion& c = batch[record];
    double r = kto_reward(c, p);
    double sign = c.desirable ? 1.0 : -1.0;
    double s = logistic(sign * (r - z_ref));
    double w = kto_weight(c, p);
    return -(w * sign * p.beta * s * (1.0 - s)) / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// PreferenceRecord JSONL
// ---------------------------------------------------------------------------

struct PreferenceRecord {
    std::string id;
    ScoredCompletion completion;
};

// JSONL: {id, policy_logprobs: [...], ref_logprobs: [...], desirable: bool}
inline std::vector<PreferenceRecord> load_preference_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open records: " + path);
    std::vector<PreferenceRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string t = fe_detail::trim(line);
        if (t.empty()) continue;
        auto j = nlohmann::json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("policy_logprobs") ||
            !j.contains("ref_logprobs") || !j.contains("desirable"))
            throw std::runtime_error("malformed preference record at line " +
                                     std::to_string(lineno));
        PreferenceRecord r;
        r.id = j.contains("id")
                   ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                   : std::to_string(lineno);
        r.completion.policy_logprobs = j["policy_logprobs"].get<std::vector<double>>();
        r.completion.ref_logprobs = j["ref_logprobs"].get<std::vector<double>>();
        r.completion.desirable = j["desirable"].get<bool>();
        align_detail::check_completion(r.completion);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace optloop
