// Copyright 2026 The pmdp-verify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmdpv/pmdpv.h"

#include "pmdpv/checker.hpp"
#include "pmdpv/design.hpp"
#include "pmdpv/error.hpp"
#include "pmdpv/harness.hpp"
#include "pmdpv/special.hpp"

#include "json.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <new>
#include <optional>
#include <sstream>
#include <string>

struct pmdpv_model {
    explicit pmdpv_model(pmdpv::Pmdp m) : model(std::move(m)) {}

    const pmdpv::ExpandedModel& expanded() const {
        std::call_once(once, [this] { exp.emplace(pmdpv::expand(model)); });
        return *exp;
    }

    pmdpv::Pmdp model;
    mutable std::once_flag once;
    mutable std::optional<pmdpv::ExpandedModel> exp;
};

struct pmdpv_region {
    pmdpv::RegionMap map;
};

namespace {

thread_local std::string g_last_error;

class ArgumentError : public pmdpv::Error {
public:
    using Error::Error;
};

class IoError : public pmdpv::Error {
public:
    using Error::Error;
};

template <class F>
pmdpv_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return PMDPV_OK;
    } catch (const ArgumentError& e) {
        g_last_error = e.what();
        return PMDPV_ERR_ARGUMENT;
    } catch (const IoError& e) {
        g_last_error = e.what();
        return PMDPV_ERR_IO;
    } catch (const pmdpv::ParseError& e) {
        g_last_error = e.what();
        return PMDPV_ERR_PARSE;
    } catch (const pmdpv::ValidationError& e) {
        g_last_error = e.what();
        return PMDPV_ERR_VALIDATION;
    } catch (const pmdpv::NumericError& e) {
        g_last_error = e.what();
        return PMDPV_ERR_NUMERIC;
    } catch (const pmdpv::LimitError& e) {
        g_last_error = e.what();
        return PMDPV_ERR_LIMIT;
    } catch (const pmdpv::Error& e) {
        g_last_error = e.what();
        return PMDPV_ERR_IO;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return PMDPV_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = std::string("internal error: ") + e.what();
        return PMDPV_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "internal error";
        return PMDPV_ERR_INTERNAL;
    }
}

template <class T>
T& need(T* p, const char* what) {
    if (!p)
        throw ArgumentError(std::string(what) + " must not be null");
    return *p;
}

const char* need_str(const char* p, const char* what) {
    if (!p)
        throw ArgumentError(std::string(what) + " must not be null");
    return p;
}

void give(char** out, const std::string& s) {
    need(out, "output pointer");
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf)
        throw std::bad_alloc();
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
}

std::string read_file(const char* path) {
    std::ifstream in(need_str(path, "path"), std::ios::binary);
    if (!in)
        throw IoError(std::string("cannot open ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<pmdpv::Tie> parse_ties(const char* text, const std::vector<std::string>& names) {
    std::vector<pmdpv::Tie> out;
    if (!text)
        return out;
    std::string_view rest(text);
    while (!rest.empty()) {
        auto comma = rest.find(',');
        auto item = rest.substr(0, comma);
        if (!item.empty())
            out.push_back(pmdpv::parse_tie(item, names));
        if (comma == std::string_view::npos)
            break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

// Posterior over the model's parameters in model order.
pmdpv::Posterior posterior_for(const pmdpv::Pmdp& m, const char* json) {
    if (!json)
        return pmdpv::Posterior::prior_of(m);
    auto given = pmdpv::posterior_from_json(json);
    pmdpv::Posterior p;
    p.names = m.parameter_names();
    for (const auto& name : p.names) {
        auto it = std::find(given.names.begin(), given.names.end(), name);
        if (it == given.names.end())
            throw pmdpv::ValidationError("posterior has no entry for parameter '" + name + "'");
        p.params.push_back(given.params[static_cast<std::size_t>(it - given.names.begin())]);
    }
    if (given.names.size() != p.names.size())
        throw pmdpv::ValidationError("posterior names parameters the model does not have");
    return p;
}

pmdpv::RegionContext region_context(const pmdpv::Pmdp& m, const pmdpv::RegionMap& map, const char* ties,
                                    std::optional<pmdpv::ParamSpace>& space) {
    pmdpv::Reduction red(m.num_params(), parse_ties(ties, m.parameter_names()));
    if (red.free_dims() != map.dims())
        throw pmdpv::ValidationError("region map has " + std::to_string(map.dims()) +
                                     " dimensions but the model has " + std::to_string(red.free_dims()) +
                                     " free parameters; pass the ties the map was synthesised with");
    space.emplace(red.reduce(m.param_space()));
    return pmdpv::RegionContext{&map, std::move(red), &*space};
}

std::vector<double> theta_of(const double* theta, std::size_t n) {
    if (n > 0 && !theta)
        throw ArgumentError("theta must not be null");
    return std::vector<double>(theta, theta + n);
}

pmdpv::StrategyMode strategy_mode(pmdpv_mode m) {
    switch (m) {
    case PMDPV_MODE_SYNTH:
        return pmdpv::StrategyMode::Synth;
    case PMDPV_MODE_DP:
        return pmdpv::StrategyMode::Dp;
    case PMDPV_MODE_RANDOM_STATIC:
        return pmdpv::StrategyMode::RandomStatic;
    case PMDPV_MODE_NONE:
        return pmdpv::StrategyMode::None;
    default:
        throw ArgumentError("mode must be synth, dp, random-static or none");
    }
}

pmdpv_verdict to_c(pmdpv::Verdict v) {
    switch (v) {
    case pmdpv::Verdict::Sat:
        return PMDPV_SAT;
    case pmdpv::Verdict::Unsat:
        return PMDPV_UNSAT;
    case pmdpv::Verdict::Unknown:
        return PMDPV_UNKNOWN;
    case pmdpv::Verdict::Invalid:
        break;
    }
    return PMDPV_INVALID;
}

} // namespace

extern "C" {

const char* pmdpv_version(void) { return "1.0.0"; }

const char* pmdpv_last_error(void) { return g_last_error.c_str(); }

const char* pmdpv_status_name(pmdpv_status s) {
    switch (s) {
    case PMDPV_OK:
        return "ok";
    case PMDPV_ERR_ARGUMENT:
        return "argument error";
    case PMDPV_ERR_PARSE:
        return "parse error";
    case PMDPV_ERR_VALIDATION:
        return "validation error";
    case PMDPV_ERR_NUMERIC:
        return "numeric error";
    case PMDPV_ERR_LIMIT:
        return "limit exceeded";
    case PMDPV_ERR_IO:
        return "i/o error";
    case PMDPV_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

void pmdpv_string_free(char* s) { std::free(s); }

pmdpv_status pmdpv_model_load(const char* path, pmdpv_model** out) {
    return guarded([&] {
        need(out, "output pointer");
        *out = new pmdpv_model(pmdpv::parse_model(read_file(path)));
    });
}

pmdpv_status pmdpv_model_parse(const char* text, pmdpv_model** out) {
    return guarded([&] {
        need(out, "output pointer");
        *out = new pmdpv_model(pmdpv::parse_model(need_str(text, "model text")));
    });
}

void pmdpv_model_free(pmdpv_model* m) { delete m; }

pmdpv_status pmdpv_model_to_json(const pmdpv_model* m, char** out) {
    return guarded([&] { give(out, pmdpv::print_model(need(m, "model").model)); });
}

pmdpv_status pmdpv_model_num_states(const pmdpv_model* m, size_t* out) {
    return guarded([&] { need(out, "output pointer") = need(m, "model").model.num_states(); });
}

pmdpv_status pmdpv_model_num_params(const pmdpv_model* m, size_t* out) {
    return guarded([&] { need(out, "output pointer") = need(m, "model").model.num_params(); });
}

pmdpv_status pmdpv_model_strategy_count(const pmdpv_model* m, size_t* out) {
    return guarded([&] { need(out, "output pointer") = pmdpv::strategy_count(need(m, "model").model); });
}

pmdpv_status pmdpv_model_expand(const pmdpv_model* m, char** out) {
    return guarded([&] {
        const auto& h = need(m, "model");
        give(out, pmdpv::expanded_to_json(h.model, h.expanded()));
    });
}

pmdpv_status pmdpv_check(const pmdpv_model* m, const char* property, const double* theta, size_t n,
                         double* probability, int* satisfied) {
    return guarded([&] {
        const auto& model = need(m, "model").model;
        const auto prop = pmdpv::parse_property(need_str(property, "property"));
        const auto mdp = pmdpv::instantiate(model, theta_of(theta, n));
        const double p = pmdpv::decisive_probability(mdp, prop);
        if (probability)
            *probability = p;
        if (satisfied)
            *satisfied = pmdpv::compare(p, prop.op, prop.threshold) ? 1 : 0;
    });
}

void pmdpv_synth_options_init(pmdpv_synth_options* o) {
    if (!o)
        return;
    pmdpv::SynthOptions d;
    o->tol = d.tol;
    o->budget = d.budget;
    o->threads = d.threads;
    o->minimum_semantics = 0;
    o->ties = nullptr;
    o->max_refinements = d.max_refinements;
}

pmdpv_status pmdpv_synthesise(const pmdpv_model* m, const char* property, const pmdpv_synth_options* o,
                              pmdpv_region** out, pmdpv_synth_stats* stats) {
    return guarded([&] {
        const auto& model = need(m, "model").model;
        need(out, "output pointer");
        pmdpv::SynthOptions so;
        if (o) {
            if (!(o->tol > 0.0) || !(o->budget >= 0.0 && o->budget <= 1.0))
                throw ArgumentError("tolerance must be positive and budget within [0, 1]");
            so.tol = o->tol;
            so.budget = o->budget;
            so.threads = o->threads == 0 ? 1 : o->threads;
            so.quantifier = o->minimum_semantics ? pmdpv::Quantifier::Minimum : pmdpv::Quantifier::Universal;
            so.ties = parse_ties(o->ties, model.parameter_names());
            so.max_refinements = o->max_refinements;
        }
        pmdpv::SynthStats st;
        auto map = pmdpv::synthesise_region(model, pmdpv::parse_property(need_str(property, "property")), so, &st);
        if (stats) {
            stats->cells = map.cells().size();
            stats->evaluations = st.evaluations;
            stats->refinements = st.refinements;
            stats->final_tol = st.final_tol;
            stats->undecided_fraction = st.undecided_fraction;
        }
        *out = new pmdpv_region{std::move(map)};
    });
}

pmdpv_status pmdpv_region_load(const char* path, pmdpv_region** out) {
    return guarded([&] {
        need(out, "output pointer");
        *out = new pmdpv_region{pmdpv::region_from_json(read_file(path))};
    });
}

pmdpv_status pmdpv_region_parse(const char* text, pmdpv_region** out) {
    return guarded([&] {
        need(out, "output pointer");
        *out = new pmdpv_region{pmdpv::region_from_json(need_str(text, "region text"))};
    });
}

void pmdpv_region_free(pmdpv_region* r) { delete r; }

pmdpv_status pmdpv_region_to_json(const pmdpv_region* r, char** out) {
    return guarded([&] { give(out, pmdpv::region_to_json(need(r, "region").map)); });
}

pmdpv_status pmdpv_region_dims(const pmdpv_region* r, size_t* out) {
    return guarded([&] { need(out, "output pointer") = need(r, "region").map.dims(); });
}

pmdpv_status pmdpv_region_verdict(const pmdpv_region* r, const double* point, size_t n, pmdpv_verdict* out) {
    return guarded([&] {
        const auto& map = need(r, "region").map;
        if (n != map.dims())
            throw ArgumentError("point has " + std::to_string(n) + " coordinates, map has " +
                                std::to_string(map.dims()));
        need(out, "output pointer") = to_c(map.membership(theta_of(point, n)));
    });
}

pmdpv_status pmdpv_region_volume(const pmdpv_region* r, pmdpv_verdict v, double* out) {
    return guarded([&] {
        const auto& map = need(r, "region").map;
        pmdpv::Verdict verdict;
        switch (v) {
        case PMDPV_SAT:
            verdict = pmdpv::Verdict::Sat;
            break;
        case PMDPV_UNSAT:
            verdict = pmdpv::Verdict::Unsat;
            break;
        case PMDPV_UNKNOWN:
            verdict = pmdpv::Verdict::Unknown;
            break;
        case PMDPV_INVALID:
            verdict = pmdpv::Verdict::Invalid;
            break;
        default:
            throw ArgumentError("unknown verdict");
        }
        need(out, "output pointer") = map.volume(verdict);
    });
}

void pmdpv_sim_options_init(pmdpv_sim_options* o) {
    if (!o)
        return;
    o->theta = nullptr;
    o->n_theta = 0;
    o->traces = 1;
    o->length = 1;
    o->seed = 0;
    o->mode = PMDPV_MODE_NONE;
    o->strategy_json = nullptr;
}

pmdpv_status pmdpv_simulate(const pmdpv_model* m, const pmdpv_sim_options* o, char** out) {
    return guarded([&] {
        const auto& model = need(m, "model").model;
        const auto& opt = need(o, "options");
        if (opt.traces == 0 || opt.length == 0)
            throw ArgumentError("trace count and length must be at least 1");
        pmdpv::SimConfig sc;
        sc.theta = theta_of(opt.theta, opt.n_theta);
        sc.traces = opt.traces;
        sc.length = opt.length;
        sc.seed = opt.seed;
        switch (opt.mode) {
        case PMDPV_MODE_FIXED:
            sc.mode = pmdpv::ActionMode::Fixed;
            sc.strategy = pmdpv::strategy_from_json(need_str(opt.strategy_json, "strategy"), model);
            break;
        case PMDPV_MODE_RANDOM_STATIC:
            sc.mode = pmdpv::ActionMode::RandomStatic;
            break;
        case PMDPV_MODE_NONE:
            sc.mode = pmdpv::ActionMode::NoStrategy;
            break;
        default:
            throw ArgumentError("simulation mode must be fixed, random-static or none");
        }
        give(out, pmdpv::traces_to_jsonl(pmdpv::simulate_traces(model, sc), model));
    });
}

pmdpv_status pmdpv_infer(const pmdpv_model* m, const char* traces_jsonl, char** out) {
    return guarded([&] {
        const auto& h = need(m, "model");
        auto traces = pmdpv::parse_traces(need_str(traces_jsonl, "traces"), h.model);
        auto counts = pmdpv::extract_counts(h.model, traces);
        auto inf = pmdpv::infer(h.expanded(), counts, pmdpv::Posterior::prior_of(h.model));
        give(out, pmdpv::posterior_to_json(inf.posterior));
    });
}

void pmdpv_confidence_options_init(pmdpv_confidence_options* o) {
    if (!o)
        return;
    o->samples = 100000;
    o->seed = 0;
    o->threads = 1;
    o->exact = 0;
    o->ties = nullptr;
}

pmdpv_status pmdpv_confidence(const pmdpv_region* r, const char* posterior_json, const pmdpv_confidence_options* o,
                              char** out) {
    return guarded([&] {
        const auto& map = need(r, "region").map;
        pmdpv_confidence_options def;
        pmdpv_confidence_options_init(&def);
        const auto& opt = o ? *o : def;
        auto post = pmdpv::posterior_from_json(need_str(posterior_json, "posterior"));
        pmdpv::RegionContext ctx{&map, pmdpv::Reduction(post.params.size(), parse_ties(opt.ties, post.names)),
                                 nullptr};
        pmdpv::ConfidenceEstimate e;
        if (opt.exact) {
            e = pmdpv::confidence_exact(ctx, post);
        } else {
            if (opt.samples == 0)
                throw ArgumentError("sample count must be positive");
            pmdpv::ConfidenceOptions co;
            co.samples = opt.samples;
            co.seed = opt.seed;
            co.threads = opt.threads == 0 ? 1 : opt.threads;
            e = pmdpv::confidence(ctx, post, co);
        }
        give(out, pmdpv::confidence_to_json(e));
    });
}

pmdpv_status pmdpv_beta_interval_mass(double a, double b, double lo, double hi, double* out) {
    return guarded([&] { need(out, "output pointer") = pmdpv::confidence_beta_oracle(a, b, lo, hi); });
}

void pmdpv_design_options_init(pmdpv_design_options* o) {
    if (!o)
        return;
    pmdpv::DesignOptions d;
    o->mode = PMDPV_MODE_SYNTH;
    o->trace_length = d.trace_length;
    o->mc_samples = d.mc_samples;
    o->seed = 0;
    o->threads = 1;
    o->discount = d.discount;
    o->max_strategies = d.max_strategies;
    o->exact = 0;
    o->ties = nullptr;
}

pmdpv_status pmdpv_design(const pmdpv_model* m, const pmdpv_region* r, const char* posterior_json,
                          const pmdpv_design_options* o, char** out) {
    return guarded([&] {
        const auto& h = need(m, "model");
        const auto& map = need(r, "region").map;
        pmdpv_design_options def;
        pmdpv_design_options_init(&def);
        const auto& opt = o ? *o : def;
        if (opt.trace_length == 0 || opt.mc_samples == 0)
            throw ArgumentError("trace length and sample count must be positive");
        std::optional<pmdpv::ParamSpace> space;
        pmdpv::DesignContext ctx{&h.model, &h.expanded(), region_context(h.model, map, opt.ties, space)};
        const auto post = posterior_for(h.model, posterior_json);
        pmdpv::DesignOptions d;
        d.trace_length = opt.trace_length;
        d.mc_samples = opt.mc_samples;
        d.seed = opt.seed;
        d.threads = opt.threads == 0 ? 1 : opt.threads;
        d.discount = opt.discount;
        d.max_strategies = opt.max_strategies;
        if (opt.exact)
            d.synth_integration = pmdpv::Integration::Exact;
        switch (strategy_mode(opt.mode)) {
        case pmdpv::StrategyMode::Synth:
            give(out, pmdpv::gain_report_to_json(pmdpv::synthesise_strategy(ctx, post, d), h.model));
            break;
        case pmdpv::StrategyMode::Dp:
            give(out, pmdpv::dp_report_to_json(pmdpv::offline_dp_strategy(ctx, post, d), h.model));
            break;
        case pmdpv::StrategyMode::RandomStatic: {
            pmdpv::Rng rng(opt.seed);
            auto s = pmdpv::random_strategy(h.model, rng);
            nlohmann::ordered_json doc;
            doc["mode"] = "random-static";
            doc["strategy"] = nlohmann::ordered_json::parse(pmdpv::strategy_to_json(s, h.model));
            give(out, doc.dump(2) + "\n");
            break;
        }
        case pmdpv::StrategyMode::None: {
            nlohmann::ordered_json doc;
            doc["mode"] = "none";
            doc["strategy"] = nullptr;
            give(out, doc.dump(2) + "\n");
            break;
        }
        }
    });
}

void pmdpv_run_options_init(pmdpv_run_options* o) {
    if (!o)
        return;
    pmdpv::RunOptions d;
    o->mode = PMDPV_MODE_SYNTH;
    o->theta = nullptr;
    o->n_theta = 0;
    o->traces = d.traces;
    o->length = d.length;
    o->batch = d.batch;
    o->seed = 0;
    o->mc_samples = d.mc_samples;
    o->design_mc_samples = d.design_mc_samples;
    o->ties = nullptr;
}

pmdpv_status pmdpv_run(const pmdpv_model* m, const pmdpv_region* r, const pmdpv_run_options* o, char** out) {
    return guarded([&] {
        const auto& h = need(m, "model");
        const auto& map = need(r, "region").map;
        const auto& opt = need(o, "options");
        if (opt.mc_samples == 0 || opt.design_mc_samples == 0)
            throw ArgumentError("sample counts must be positive");
        std::optional<pmdpv::ParamSpace> space;
        pmdpv::DesignContext ctx{&h.model, &h.expanded(), region_context(h.model, map, opt.ties, space)};
        pmdpv::RunOptions ro;
        ro.mode = strategy_mode(opt.mode);
        ro.theta = theta_of(opt.theta, opt.n_theta);
        ro.traces = opt.traces;
        ro.length = opt.length;
        ro.batch = opt.batch;
        ro.seed = opt.seed;
        ro.mc_samples = opt.mc_samples;
        ro.design_mc_samples = opt.design_mc_samples;
        auto res = pmdpv::run_verification(ctx, ro);
        auto doc = nlohmann::ordered_json::parse(pmdpv::run_result_to_json(res, h.model));
        doc["ground_truth"] = nullptr;
        try {
            auto g = pmdpv::ground_truth(ctx.region, ro.theta);
            doc["ground_truth"] = g.value;
            doc["boundary"] = g.boundary;
        } catch (const pmdpv::ValidationError& e) {
            doc["ground_truth_error"] = e.what();
        }
        give(out, doc.dump(2) + "\n");
    });
}

void pmdpv_eval_options_init(pmdpv_eval_options* o) {
    if (!o)
        return;
    o->threads = 1;
    o->override_seed = 0;
    o->seed = 0;
    o->mc_samples = 0;
    o->trials = 0;
}

pmdpv_status pmdpv_eval(const char* spec_path, const char* out_dir, const pmdpv_eval_options* o, char** out) {
    return guarded([&] {
        pmdpv_eval_options def;
        pmdpv_eval_options_init(&def);
        const auto& opt = o ? *o : def;
        auto spec = pmdpv::load_experiment_spec(need_str(spec_path, "spec path"));
        if (opt.override_seed)
            spec.seed = opt.seed;
        if (opt.mc_samples)
            spec.mc_samples = spec.design_mc_samples = opt.mc_samples;
        if (opt.trials)
            spec.trials = opt.trials;
        const unsigned threads = opt.threads == 0 ? 1 : opt.threads;
        auto problem = pmdpv::prepare_problem(spec, threads);
        auto result = pmdpv::evaluate_grid(spec, problem, threads);
        auto files = pmdpv::emit_plots(result, need_str(out_dir, "output directory"));
        nlohmann::ordered_json doc;
        doc["files"] = files;
        auto cells = nlohmann::ordered_json::array();
        for (const auto& c : result.cells) {
            nlohmann::ordered_json row;
            row["theta"] = c.theta;
            row["mode"] = pmdpv::to_string(c.mode);
            row["traces"] = c.config.traces;
            row["len"] = c.config.length;
            row["truth"] = c.truth.value;
            row["boundary"] = c.truth.boundary;
            if (c.error.empty())
                row["mse"] = c.mse;
            else
                row["error"] = c.error;
            cells.push_back(std::move(row));
        }
        doc["cells"] = std::move(cells);
        give(out, doc.dump(2) + "\n");
    });
}

} // extern "C"
