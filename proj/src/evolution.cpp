#include "alphasharpe/evolution.hpp"
#include "alphasharpe/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace alphasharpe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate_request(const GeneratorRequest& req) {
    if (req.mode == GeneratorMode::Crossover && req.parents.size() < 2)
        throw ValidationError("crossover needs at least 2 parents");
    if (req.mode == GeneratorMode::Mutation && req.parents.size() != 1)
        throw ValidationError("mutation needs exactly 1 parent");
    if (req.parents.empty() || req.parents.size() > 4)
        throw ValidationError("generator requests carry 1-4 parents");
}

// Kind cycle used by the mutation toggle.
const std::vector<MetricKind> kKindCycle = {
    MetricKind::Sharpe, MetricKind::Psr,     MetricKind::AlphaS1,
    MetricKind::AlphaS2, MetricKind::AlphaS3, MetricKind::AlphaS4,
};

MetricKind step_kind(MetricKind kind) {
    for (std::size_t i = 0; i < kKindCycle.size(); ++i)
        if (kKindCycle[i] == kind)
            return kKindCycle[(i + 1) % kKindCycle.size()];
    return kind; // Custom kinds have no neighbor
}

nlohmann::json parents_to_json(const GeneratorRequest& req) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [desc, fit] : req.parents) {
        nlohmann::json p;
        p["descriptor"] = nlohmann::json::parse(desc.to_json());
        p["fitness"] = fit;
        arr.push_back(p);
    }
    return arr;
}

} // namespace

MetricDescriptor builtin_generate(const GeneratorRequest& req, std::mt19937_64& rng) {
    validate_request(req);
    auto pick = [&rng](std::size_t n) {
        return static_cast<std::size_t>(rng() % n);
    };

    if (req.mode == GeneratorMode::Crossover) {
        const auto& fittest =
            *std::max_element(req.parents.begin(), req.parents.end(),
                              [](const auto& a, const auto& b) { return a.second < b.second; });
        MetricDescriptor child;
        child.kind = fittest.first.kind;
        if (child.kind == MetricKind::Custom)
            child.name = fittest.first.name; // custom scorers are keyed by name
        // Union of parent parameters, each value picked from a random parent
        // that defines it.
        std::map<std::string, std::vector<double>> values;
        for (const auto& [desc, fit] : req.parents)
            for (const auto& [key, v] : desc.params) values[key].push_back(v);
        for (const auto& [key, opts] : values)
            child.params[key] = opts[pick(opts.size())];
        return child;
    }

    // Mutation: rescale one parameter or step the kind.
    const MetricDescriptor& parent = req.parents.front().first;
    MetricDescriptor child = parent;
    const std::size_t n_params = parent.params.size();
    const bool can_toggle = parent.kind != MetricKind::Custom;
    const std::size_t n_moves = n_params + (can_toggle ? 1 : 0);
    if (n_moves == 0) return child;
    const std::size_t move = pick(n_moves);
    if (move < n_params) {
        static const double factors[] = {0.5, 0.8, 1.25, 2.0};
        auto it = child.params.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(move));
        it->second *= factors[pick(4)];
    } else {
        child.kind = step_kind(parent.kind);
    }
    return child;
}

std::string render_prompt(const std::string& template_text, const GeneratorRequest& req) {
    std::string out = template_text;
    auto replace_all = [&out](const std::string& key, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    };
    replace_all("{{parents_json}}", parents_to_json(req).dump());
    replace_all("{{mode}}", req.mode == GeneratorMode::Crossover ? "crossover" : "mutation");
    replace_all("{{guidance}}", req.guidance);
    return out;
}

namespace {

MetricDescriptor parse_generated_descriptor(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw GenerationRejectedError(std::string("response is not JSON: ") + e.what());
    }
    std::string descriptor_text = body;
    if (j.is_object() && j.contains("completion")) {
        if (!j["completion"].is_string())
            throw GenerationRejectedError("completion field is not a string");
        descriptor_text = j["completion"].get<std::string>();
    }
    MetricDescriptor desc;
    try {
        desc = MetricDescriptor::from_json(descriptor_text);
    } catch (const Error& e) {
        throw GenerationRejectedError(std::string("invalid descriptor: ") + e.what());
    }
    if (desc.kind == MetricKind::Custom && !find_custom_scorer(desc.name))
        throw GenerationRejectedError("descriptor names unregistered custom scorer '" +
                                      desc.name + "'");
    return desc;
}

} // namespace

MetricDescriptor external_generate(const GeneratorRequest& req,
                                   const ExternalGeneratorConfig& cfg) {
    validate_request(req);
    std::ifstream tmpl(cfg.prompt_template_path);
    if (!tmpl)
        throw ConfigError("cannot open prompt template '" + cfg.prompt_template_path + "'");
    std::stringstream buffer;
    buffer << tmpl.rdbuf();
    const std::string prompt = render_prompt(buffer.str(), req);

    // Split http://host:port/path into client base and request path.
    auto scheme_end = cfg.url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("generator URL must include a scheme: " + cfg.url);
    auto path_start = cfg.url.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos ? cfg.url : cfg.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : cfg.url.substr(path_start);

    httplib::Client client(base);
    client.set_connection_timeout(static_cast<int>(cfg.timeout_seconds), 0);
    client.set_read_timeout(static_cast<int>(cfg.timeout_seconds), 0);
    httplib::Headers headers;
    if (const char* token = std::getenv(cfg.token_env.c_str()); token && *token)
        headers.emplace("Authorization", std::string("Bearer ") + token);

    nlohmann::json payload;
    payload["mode"] = req.mode == GeneratorMode::Crossover ? "crossover" : "mutation";
    payload["prompt"] = prompt;

    std::string last_reject;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        auto res = client.Post(path, headers, payload.dump(), "application/json");
        if (!res)
            throw TransportError("completion endpoint unreachable: " + base);
        if (res->status != 200) {
            last_reject = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            return parse_generated_descriptor(res->body);
        } catch (const GenerationRejectedError& e) {
            last_reject = e.what();
        }
    }
    throw GenerationRejectedError("no valid descriptor after " +
                                  std::to_string(cfg.max_retries) + " attempts: " + last_reject);
}

namespace {

std::string descriptor_key(const MetricDescriptor& d) {
    std::string key = to_string(d.kind);
    if (d.kind == MetricKind::Custom) key += ":" + d.name;
    char buf[48];
    for (const auto& [k, v] : d.params) { // std::map keeps keys sorted
        std::snprintf(buf, sizeof(buf), "|%s=%.17g", k.c_str(), v);
        key += buf;
    }
    return key;
}

std::uint64_t fold_hash(const FoldSet& folds) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (const auto& f : folds.folds) {
        mix(static_cast<std::uint64_t>(f.train.begin));
        mix(static_cast<std::uint64_t>(f.train.end));
        mix(static_cast<std::uint64_t>(f.future.begin));
        mix(static_cast<std::uint64_t>(f.future.end));
    }
    if (folds.holdout) {
        mix(static_cast<std::uint64_t>(folds.holdout->begin));
        mix(static_cast<std::uint64_t>(folds.holdout->end));
    }
    return h;
}

struct ScoreCache {
    std::unordered_map<std::string, std::pair<double, std::optional<EvalReport>>> entries;
    std::string prefix;

    explicit ScoreCache(const FoldSet& folds) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx|",
                      static_cast<unsigned long long>(fold_hash(folds)));
        prefix = buf;
    }
};

bool better(const Candidate& a, const Candidate& b) {
    const double fa = a.fitness.value_or(kNegInf);
    const double fb = b.fitness.value_or(kNegInf);
    if (fa != fb) return fa > fb;
    if (a.generation != b.generation) return a.generation < b.generation;
    return a.id < b.id;
}

} // namespace

std::vector<const Candidate*> EvolutionLog::ranking() const {
    std::vector<const Candidate*> out;
    for (const auto& c : candidates) out.push_back(&c);
    std::sort(out.begin(), out.end(),
              [](const Candidate* a, const Candidate* b) { return better(*a, *b); });
    return out;
}

const Candidate& EvolutionLog::best() const {
    if (candidates.empty())
        throw Error("empty evolution log");
    return *ranking().front();
}

std::string EvolutionLog::to_jsonl() const {
    std::string out;
    for (const auto& c : candidates) {
        nlohmann::json j;
        j["id"] = c.id;
        j["generation"] = c.generation;
        j["descriptor"] = nlohmann::json::parse(c.descriptor.to_json());
        j["lineage"] = c.lineage;
        if (c.fitness && std::isfinite(*c.fitness))
            j["fitness"] = *c.fitness;
        else
            j["fitness"] = nullptr;
        if (c.eval) {
            j["spearman"] = c.eval->spearman_agg.mean;
            j["kendall"] = c.eval->kendall_agg.mean;
            j["ndcg"] = c.eval->ndcg_agg.mean;
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

EvolutionLog evolve(const ReturnMatrix& r, const FoldSet& folds, const EvolutionConfig& cfg,
                    const std::vector<MetricDescriptor>& extra_seed) {
    if (cfg.top_k < 1 || cfg.top_k > cfg.population_size)
        throw ConfigError("top_k must lie in [1, population_size]");
    if (cfg.n_generations < 0 || cfg.crossover_count < 0 || cfg.mutation_count < 0)
        throw ConfigError("generation and offspring counts must be nonnegative");

    std::mt19937_64 rng(cfg.seed);
    EvolutionLog log;
    ScoreCache cache(folds);

    auto score = [&](Candidate& c) {
        const std::string key = cache.prefix + descriptor_key(c.descriptor);
        auto it = cache.entries.find(key);
        if (it != cache.entries.end()) {
            c.fitness = it->second.first;
            c.eval = it->second.second;
            return;
        }
        try {
            EvalReport rep = evaluate_metric(c.descriptor, r, folds, cfg.rf, cfg.ndcg_fraction);
            c.fitness = fitness(rep, cfg.weights);
            c.eval = std::move(rep);
        } catch (const Error&) {
            c.fitness = kNegInf; // failed candidates lose, the loop continues
            c.eval.reset();
        }
        cache.entries.emplace(key, std::make_pair(*c.fitness, c.eval));
    };

    auto select_top = [&](std::vector<Candidate> pool) {
        std::sort(pool.begin(), pool.end(), better);
        std::vector<Candidate> kept;
        std::vector<std::string> seen;
        for (auto& c : pool) {
            const std::string key = descriptor_key(c.descriptor);
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            kept.push_back(std::move(c));
            if (static_cast<int>(kept.size()) == cfg.top_k) break;
        }
        return kept;
    };

    auto generate = [&](const GeneratorRequest& req) -> MetricDescriptor {
        if (cfg.generator == GeneratorKind::External) {
            try {
                return external_generate(req, cfg.external);
            } catch (const Error& e) {
                log.warnings.push_back(std::string("external generator failed (") + e.what() +
                                       "), using builtin");
            }
        }
        return builtin_generate(req, rng);
    };

    // Seed population: registered baselines plus injected descriptors.
    std::vector<Candidate> population;
    int counter = 0;
    for (const auto& desc : baseline_descriptors()) {
        Candidate c;
        c.id = "seed_" + desc.name;
        c.descriptor = desc;
        population.push_back(std::move(c));
    }
    for (const auto& desc : extra_seed) {
        Candidate c;
        c.id = "seed_" + (desc.name.empty() ? "extra_" + std::to_string(counter++) : desc.name);
        c.descriptor = desc;
        population.push_back(std::move(c));
    }
    for (auto& c : population) {
        score(c);
        log.candidates.push_back(c);
    }
    std::vector<Candidate> retained = select_top(population);
    {
        std::vector<std::string> ids;
        for (const auto& c : retained) ids.push_back(c.id);
        log.retained.push_back(std::move(ids));
    }

    const int offspring_budget = cfg.population_size - cfg.top_k;
    for (int gen = 1; gen <= cfg.n_generations; ++gen) {
        std::vector<Candidate> children;
        int made = 0;
        auto child_of = [&](const MetricDescriptor& desc, std::vector<std::string> lineage,
                            const char* tag) {
            Candidate c;
            c.id = "g" + std::to_string(gen) + "_" + tag + std::to_string(made++);
            c.descriptor = desc;
            c.lineage = std::move(lineage);
            int max_parent_gen = 0;
            for (const auto& pid : c.lineage)
                for (const auto& p : retained)
                    if (p.id == pid) max_parent_gen = std::max(max_parent_gen, p.generation);
            c.generation = max_parent_gen + 1;
            // custom descriptors keep the name their scorer is registered under
            if (c.descriptor.kind != MetricKind::Custom) c.descriptor.name = c.id;
            children.push_back(std::move(c));
        };

        // Crossover among the retained parents, then mutate each hybrid once.
        if (retained.size() >= 2) {
            for (int i = 0; i < cfg.crossover_count && made < offspring_budget; ++i) {
                std::size_t n_parents =
                    std::min<std::size_t>(2 + rng() % 3, retained.size());
                std::vector<std::size_t> idx(retained.size());
                std::iota(idx.begin(), idx.end(), 0u);
                std::shuffle(idx.begin(), idx.end(), rng);
                GeneratorRequest req;
                req.mode = GeneratorMode::Crossover;
                std::vector<std::string> lineage;
                for (std::size_t p = 0; p < n_parents; ++p) {
                    req.parents.emplace_back(retained[idx[p]].descriptor,
                                             retained[idx[p]].fitness.value_or(kNegInf));
                    lineage.push_back(retained[idx[p]].id);
                }
                MetricDescriptor hybrid = generate(req);
                GeneratorRequest mut;
                mut.mode = GeneratorMode::Mutation;
                mut.parents.emplace_back(hybrid, kNegInf);
                child_of(generate(mut), std::move(lineage), "x");
            }
        }
        // Straight mutations of the fittest parents.
        for (int i = 0; i < cfg.mutation_count && made < offspring_budget; ++i) {
            const Candidate& parent = retained[static_cast<std::size_t>(i) % retained.size()];
            GeneratorRequest req;
            req.mode = GeneratorMode::Mutation;
            req.parents.emplace_back(parent.descriptor, parent.fitness.value_or(kNegInf));
            child_of(generate(req), {parent.id}, "m");
        }

        for (auto& c : children) {
            score(c);
            log.candidates.push_back(c);
        }

        std::vector<Candidate> pool = retained; // elitism: parents compete with children
        for (auto& c : children) pool.push_back(std::move(c));
        retained = select_top(std::move(pool));
        std::vector<std::string> ids;
        for (const auto& c : retained) ids.push_back(c.id);
        log.retained.push_back(std::move(ids));
    }
    return log;
}

} // namespace alphasharpe
