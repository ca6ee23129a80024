#include "narrisk/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "narrisk/analysis.hpp"
#include "narrisk/error.hpp"
#include "narrisk/format.hpp"
#include "narrisk/random.hpp"
#include "narrisk/report.hpp"
#include "narrisk/synth.hpp"

namespace narrisk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string canonical(const RunConfig& c) {
    std::string groups;
    for (auto g : c.groups) groups += (groups.empty() ? "" : ",") + std::string(to_string(g));
    std::string keyword_files;
    for (const auto& p : c.keyword_files) keyword_files += (keyword_files.empty() ? "" : ",") + p.generic_string();
    std::string s;
    s += "manifest=" + c.manifest.generic_string() + "\n";
    s += "language=" + (c.language ? std::string(to_string(*c.language)) : std::string("all")) + "\n";
    s += "groups=" + groups + "\n";
    s += "lexicon=" + c.lexicon.generic_string() + "\n";
    s += "keywords_files=" + keyword_files + "\n";
    s += "tier=" + c.tier + "\n";
    s += "penalty=" + std::string(to_string(c.penalty.kind)) + "\n";
    s += "C=" + shortest(c.penalty.c) + "\n";
    s += "tolerance=" + shortest(c.penalty.tolerance) + "\n";
    s += "max_iterations=" + std::to_string(c.penalty.max_iterations) + "\n";
    s += "repetitions=" + std::to_string(c.repetitions) + "\n";
    s += "seed=" + std::to_string(c.seed) + "\n";
    s += "split=" + (c.split ? std::string(to_string(*c.split)) : std::string("default")) + "\n";
    return s;
}

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Files written by one command; removed again unless the command succeeds.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
    Outputs(const Outputs&) = delete;
    Outputs& operator=(const Outputs&) = delete;
    ~Outputs() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

    fs::path write(const std::string& name, std::string_view content) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + p.string() + "'");
        written_.push_back(p);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("failed writing '" + p.string() + "'");
        return p;
    }

    const std::vector<fs::path>& written() const { return written_; }
    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

struct Resources {
    std::optional<PosLexicon> lexicon;
    std::vector<KeywordSpec> keyword_specs;

    const KeywordSpec* spec_for(Language lang) const {
        for (const auto& s : keyword_specs) {
            if (s.language == lang) return &s;
        }
        return nullptr;
    }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Corpus load(const RunConfig& c) {
    if (c.manifest.empty()) throw UsageError("--manifest is required");
    LoadOptions opts;
    opts.textgrid.tier_name = c.tier;
    return load_corpus(c.manifest, opts);
}

Resources load_resources(const RunConfig& c) {
    Resources r;
    if (!c.lexicon.empty()) r.lexicon = PosLexicon::load(c.lexicon);
    for (const auto& p : c.keyword_files) r.keyword_specs.push_back(read_keyword_spec(p));
    return r;
}

std::vector<Language> languages(const RunConfig& c, const Corpus& corpus) {
    if (c.language) return {*c.language};
    std::vector<Language> out;
    for (Language l : {Language::afrikaans, Language::isixhosa}) {
        if (!corpus.select(l).empty()) out.push_back(l);
    }
    return out;
}

std::vector<FeatureGroup> groups(const RunConfig& c) {
    return c.groups.empty() ? std::vector<FeatureGroup>{FeatureGroup::proficiency} : c.groups;
}

std::string stem(Language l, FeatureGroup g) { return std::string(to_string(l)) + "_" + std::string(to_string(g)); }

FeatureConfig feature_config(Language lang, FeatureGroup group, Split split, const Resources& res) {
    FeatureConfig fc;
    fc.split = split;
    fc.lexicon = res.lexicon ? &*res.lexicon : nullptr;
    if (group == FeatureGroup::keywords) {
        fc.keywords = res.spec_for(lang);
        if (!fc.keywords) {
            throw UsageError("no keyword spec for " + std::string(to_string(lang)) +
                             "; run `narrisk keywords` first and pass its output with --keywords-file");
        }
    }
    return fc;
}

FeatureMatrix labeled_matrix(const Corpus& corpus, Language lang, FeatureGroup group, Split split,
                             const Resources& res, unsigned jobs) {
    FeatureConfig fc = feature_config(lang, group, split, res);
    fc.labeled_only = true;
    fc.jobs = jobs;
    return build_feature_matrix(corpus, lang, group, fc);
}

TrainedModel fit(const Corpus& corpus, Language lang, FeatureGroup group, const RunConfig& c, const Resources& res) {
    TrainedModel m = train(labeled_matrix(corpus, lang, group, Split::train, res, c.jobs), c.penalty);
    m.metadata.group = std::string(to_string(group));
    m.metadata.language = std::string(to_string(lang));
    m.metadata.seed = c.seed;
    return m;
}

std::vector<int> int_labels(const FeatureMatrix& m) {
    std::vector<int> y;
    for (const auto& r : m.ri) y.push_back(*r);
    return y;
}

std::optional<MetricsRow> metrics_row(const TrainedModel& model, const Corpus& corpus, Language lang,
                                      FeatureGroup group, Split split, const Resources& res, unsigned jobs) {
    if (corpus.select(lang, split).empty()) return std::nullopt;
    const FeatureMatrix m = labeled_matrix(corpus, lang, group, split, res, jobs);
    return MetricsRow{std::string(to_string(group)), std::string(to_string(lang)), std::string(to_string(split)),
                      confusion(predict(model, m), int_labels(m))};
}

std::uint64_t pfi_seed(std::uint64_t seed, Language lang, FeatureGroup group) {
    return random::derive_seed(seed, static_cast<std::uint64_t>(lang) + 1, static_cast<std::uint64_t>(group) + 1);
}

void write_pfi(Outputs& outs, const TrainedModel& model, const Corpus& corpus, Language lang, FeatureGroup group,
               const RunConfig& c, const Resources& res) {
    const Split split = c.split.value_or(Split::train);
    const FeatureMatrix m = labeled_matrix(corpus, lang, group, split, res, c.jobs);
    PfiOptions opts;
    opts.repetitions = c.repetitions;
    opts.master_seed = pfi_seed(c.seed, lang, group);
    opts.jobs = c.jobs;
    const auto results = ranked(permutation_importance(model, m, balanced_accuracy_metric, opts));
    const std::string name = stem(lang, group) + "_pfi";
    outs.write(name + ".csv", pfi_to_csv(results));
    PlotMeta meta{"PFI: " + std::string(to_string(lang)) + " " + std::string(to_string(group)) + " (" +
                      std::string(to_string(split)) + ")",
                  c.seed};
    outs.write(name + ".svg", render_pfi_plot(results, meta).markup);
}

void write_box_plots(Outputs& outs, const Corpus& corpus, const std::vector<Language>& langs, const RunConfig& c,
                     const Resources& res) {
    const Split split = c.split.value_or(Split::train);
    std::map<std::string, BoxGroups> by_feature;
    std::vector<std::string> order;
    for (Language lang : langs) {
        const FeatureMatrix m = labeled_matrix(corpus, lang, FeatureGroup::proficiency, split, res, c.jobs);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const std::string& name = m.names[static_cast<std::size_t>(j)];
            if (!by_feature.count(name)) order.push_back(name);
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                by_feature[name][{lang, *m.ri[static_cast<std::size_t>(i)]}].push_back(m.values(i, j));
            }
        }
    }
    for (const auto& name : order) {
        const auto& groups = by_feature[name];
        outs.write("box_" + name + ".csv", box_groups_to_csv(groups));
        outs.write("box_" + name + ".svg",
                   render_box_plot(groups, name, {name + " by RI (" + std::string(to_string(split)) + ")", c.seed}).markup);
    }
}

void write_metrics(Outputs& outs, const std::vector<MetricsRow>& rows, std::ostream& out) {
    const MetricsTable table = emit_metrics_table(rows);
    outs.write("metrics.csv", table.csv);
    outs.write("metrics.txt", table.text);
    out << table.text;
}

// --------------------------------------------------------------------------
// Commands
// --------------------------------------------------------------------------

int cmd_validate(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    std::map<std::string, std::size_t> counts;
    for (const auto& r : corpus.records) {
        ++counts[std::string(to_string(r.language)) + " " + std::string(to_string(r.split))];
    }
    out << "ok: " << corpus.records.size() << " records\n";
    for (const auto& [key, n] : counts) out << "  " << key << ": " << n << "\n";
    return ok;
}

int cmd_featurize(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    const Resources res = load_resources(c);
    Outputs outs(c.out);
    const std::vector<Split> splits = c.split ? std::vector<Split>{*c.split}
                                              : std::vector<Split>{Split::train, Split::dev, Split::test};
    for (Language lang : languages(c, corpus)) {
        for (FeatureGroup group : groups(c)) {
            for (Split split : splits) {
                if (corpus.select(lang, split).empty()) continue;
                FeatureConfig fc = feature_config(lang, group, split, res);
                fc.jobs = c.jobs;
                const auto path = outs.write(stem(lang, group) + "_" + std::string(to_string(split)) + "_features.csv",
                                             build_feature_matrix(corpus, lang, group, fc).to_csv());
                out << "wrote " << path.generic_string() << "\n";
            }
        }
    }
    outs.commit();
    return ok;
}

int cmd_keywords(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    Outputs outs(c.out);
    for (Language lang : languages(c, corpus)) {
        const auto candidates = top_n_words(corpus, lang, 20);
        KeywordSpec candidate_spec{lang, candidates, true};

        FeatureMatrix m;
        std::vector<FeatureVector> rows;
        for (const auto* r : corpus.select(lang, Split::train)) {
            if (!r->labeled()) continue;
            rows.push_back(keyword_counts(*r, candidate_spec));
            m.ri.push_back(r->ri);
            m.record_ids.push_back(r->child_id);
        }
        if (rows.empty()) throw DomainError("no labeled training records for " + std::string(to_string(lang)));
        m.names = rows.front().names;
        m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.names.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < m.names.size(); ++j) {
                m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
            }
        }

        const KeywordSelection sel = select_keywords(candidates, m, lang);
        json doc;
        doc["language"] = to_string(lang);
        doc["keywords"] = sel.spec.keywords;
        doc["include_story_control"] = sel.spec.include_story_control;
        json weights = json::array();
        for (const auto& [name, w] : sel.weights) weights.push_back(json::array({name, w}));
        doc["provenance"] = {{"candidates", sel.candidates}, {"C", sel.chosen_c}, {"weights", weights},
                             {"tool", kToolVersion}};
        const auto path = outs.write(std::string(to_string(lang)) + "_keywords.json", doc.dump(2) + "\n");
        out << "wrote " << path.generic_string() << " (C = " << shortest(sel.chosen_c) << ")\n";
    }
    outs.commit();
    return ok;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    const Resources res = load_resources(c);
    Outputs outs(c.out);
    for (Language lang : languages(c, corpus)) {
        for (FeatureGroup group : groups(c)) {
            const TrainedModel m = fit(corpus, lang, group, c, res);
            const auto path = outs.write(stem(lang, group) + ".model", serialize_model(m));
            out << "wrote " << path.generic_string() << " (" << m.metadata.iterations << " iterations)\n";
        }
    }
    outs.commit();
    return ok;
}

TrainedModel load_model(const RunConfig& c, Language lang, FeatureGroup group) {
    const fs::path p = !c.model.empty() ? c.model : c.out / (stem(lang, group) + ".model");
    try {
        return deserialize_model(read_file(p));
    } catch (const ParseError& e) {
        throw ParseError(p.string() + ": " + e.what(), e.line());
    }
}

int cmd_evaluate(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    const Resources res = load_resources(c);
    Outputs outs(c.out);
    std::vector<MetricsRow> rows;
    const std::vector<Split> splits = c.split ? std::vector<Split>{*c.split} : std::vector<Split>{Split::train, Split::dev};
    for (Language lang : languages(c, corpus)) {
        for (FeatureGroup group : groups(c)) {
            const TrainedModel m = load_model(c, lang, group);
            for (Split split : splits) {
                if (auto row = metrics_row(m, corpus, lang, group, split, res, c.jobs)) rows.push_back(*row);
            }
        }
    }
    write_metrics(outs, rows, out);
    outs.commit();
    return ok;
}

int cmd_pfi(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    const Resources res = load_resources(c);
    Outputs outs(c.out);
    for (Language lang : languages(c, corpus)) {
        for (FeatureGroup group : groups(c)) write_pfi(outs, load_model(c, lang, group), corpus, lang, group, c, res);
    }
    for (const auto& p : outs.written()) out << "wrote " << p.generic_string() << "\n";
    outs.commit();
    return ok;
}

int cmd_plot(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    const Resources res = load_resources(c);
    Outputs outs(c.out);
    write_box_plots(outs, corpus, languages(c, corpus), c, res);
    for (const auto& p : outs.written()) out << "wrote " << p.generic_string() << "\n";
    outs.commit();
    return ok;
}

int cmd_run(const RunConfig& c, std::ostream& out) {
    const Corpus corpus = load(c);
    const Resources res = load_resources(c);
    Outputs outs(c.out);
    const auto langs = languages(c, corpus);
    const auto gs = groups(c);
    std::vector<MetricsRow> rows;

    for (Language lang : langs) {
        for (FeatureGroup group : gs) {
            for (Split split : {Split::train, Split::dev}) {
                if (corpus.select(lang, split).empty()) continue;
                FeatureConfig fc = feature_config(lang, group, split, res);
                fc.jobs = c.jobs;
                outs.write(stem(lang, group) + "_" + std::string(to_string(split)) + "_features.csv",
                           build_feature_matrix(corpus, lang, group, fc).to_csv());
            }
            const TrainedModel model = fit(corpus, lang, group, c, res);
            outs.write(stem(lang, group) + ".model", serialize_model(model));
            for (Split split : {Split::train, Split::dev}) {
                if (auto row = metrics_row(model, corpus, lang, group, split, res, c.jobs)) rows.push_back(*row);
            }
            write_pfi(outs, model, corpus, lang, group, c, res);
        }
    }
    if (std::find(gs.begin(), gs.end(), FeatureGroup::proficiency) != gs.end()) {
        write_box_plots(outs, corpus, langs, c, res);
    }
    write_metrics(outs, rows, out);

    const std::string config_text = canonical(c);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
    json run;
    run["tool_version"] = kToolVersion;
    run["seed"] = c.seed;
    run["config_hash"] = hash;
    run["config"] = config_text;
    std::vector<std::string> files;
    for (const auto& p : outs.written()) files.push_back(p.filename().generic_string());
    std::sort(files.begin(), files.end());
    run["outputs"] = files;
    outs.write("run.json", run.dump(2) + "\n");
    out << "wrote " << outs.written().size() << " files to " << c.out.generic_string() << "\n";
    outs.commit();
    return ok;
}

struct SynthFlags {
    SynthConfig config;
    std::vector<std::string> keyword_effects;
};

int cmd_synth(const RunConfig& c, SynthFlags flags, std::ostream& out) {
    SynthConfig& sc = flags.config;
    sc.seed = c.seed;
    if (c.language) sc.languages = {*c.language};
    else sc.languages = {Language::afrikaans, Language::isixhosa};
    for (const auto& spec : flags.keyword_effects) {
        KeywordEffect k;
        char sep1 = 0;
        char sep2 = 0;
        std::istringstream in(spec);
        if (!(in >> k.rank >> sep1 >> k.mean_count_ri >> sep2 >> k.mean_count_non_ri) || sep1 != ':' || sep2 != ':') {
            throw UsageError("--keyword-effect expects RANK:MEAN_RI:MEAN_NON_RI, got '" + spec + "'");
        }
        sc.keyword_effects.push_back(k);
    }
    try {
        sc.check();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const Corpus corpus = generate_corpus(sc);
    Outputs outs(c.out);
    outs.write("manifest.jsonl", write_manifest(corpus));
    outs.write("lexicon.tsv", synthetic_lexicon_text(sc));
    out << "wrote " << corpus.records.size() << " records to " << (c.out / "manifest.jsonl").generic_string() << "\n";
    outs.commit();
    return ok;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interpretable risk analysis of children's oral narratives", "narrisk"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_config("--config", "", "key = value file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig c;
    std::string language;
    std::vector<std::string> group_names;
    std::string penalty = "l2";
    std::string split;
    std::string manifest, lexicon, model, out_dir = ".";
    std::vector<std::string> keyword_files;

    app.add_option("--manifest", manifest, "Corpus manifest (JSON lines)");
    app.add_option("--language", language, "afrikaans or isixhosa (default: every language present)")
        ->check(CLI::IsMember({"afrikaans", "isixhosa"}));
    app.add_option("--group", group_names, "Feature group; repeat for several")
        ->check(CLI::IsMember({"proficiency", "grammatical", "keywords"}));
    app.add_option("--lexicon", lexicon, "POS lexicon (word<TAB>TAG)");
    app.add_option("--keywords-file", keyword_files, "Keyword spec written by `keywords`; one per language");
    app.add_option("--model", model, "Model file (default: <out>/<language>_<group>.model)");
    app.add_option("--tier", c.tier, "TextGrid tier holding child speech (default: first interval tier)");
    app.add_option("--C", c.penalty.c, "Inverse regularization strength")->capture_default_str();
    app.add_option("--penalty", penalty, "l1 or l2")->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
    app.add_option("--tolerance", c.penalty.tolerance, "Solver tolerance")->capture_default_str();
    app.add_option("--max-iterations", c.penalty.max_iterations, "Solver iteration budget")->capture_default_str();
    app.add_option("--repetitions", c.repetitions, "PFI repetitions")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--seed", c.seed, "Master seed for all randomness")->capture_default_str();
    app.add_option("--split", split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    auto* validate_cmd = app.add_subcommand("validate", "Check a manifest and report every violation");
    auto* featurize_cmd = app.add_subcommand("featurize", "Write raw feature matrices as CSV");
    auto* keywords_cmd = app.add_subcommand("keywords", "Select ten keywords per language with L1 fits");
    auto* train_cmd = app.add_subcommand("train", "Fit a model per language and group on the training split");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score saved models (F1, balanced accuracy)");
    auto* pfi_cmd = app.add_subcommand("pfi", "Permutation feature importance of saved models");
    auto* plot_cmd = app.add_subcommand("plot", "Box plots of proficiency features by RI label");
    auto* run_cmd = app.add_subcommand("run", "Featurize, train, evaluate, PFI and plot in one go");
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic corpus");

    SynthFlags synth;
    synth_cmd->add_option("--n-train", synth.config.n_train)->capture_default_str();
    synth_cmd->add_option("--n-dev", synth.config.n_dev)->capture_default_str();
    synth_cmd->add_option("--n-test", synth.config.n_test)->capture_default_str();
    synth_cmd->add_option("--ri-rate", synth.config.ri_rate)->capture_default_str();
    synth_cmd->add_option("--unique-word-effect", synth.config.unique_word_effect, "Pooled SDs, RI minus non-RI");
    synth_cmd->add_option("--utterance-length-effect", synth.config.utterance_length_effect);
    synth_cmd->add_option("--articulation-effect", synth.config.articulation_effect);
    synth_cmd->add_option("--vocabulary-size", synth.config.vocabulary_size)->capture_default_str();
    synth_cmd->add_option("--keyword-effect", synth.keyword_effects, "RANK:MEAN_RI:MEAN_NON_RI, repeatable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : io_or_usage;
    }

    try {
        c.manifest = manifest;
        c.lexicon = lexicon;
        c.model = model;
        c.out = out_dir;
        for (const auto& k : keyword_files) c.keyword_files.emplace_back(k);
        if (!language.empty()) c.language = parse_language(language);
        for (const auto& g : group_names) c.groups.push_back(*parse_feature_group(g));
        c.penalty.kind = *parse_penalty_kind(penalty);
        if (!split.empty()) c.split = parse_split(split);
        c.penalty.check();

        if (validate_cmd->parsed()) return cmd_validate(c, out);
        if (featurize_cmd->parsed()) return cmd_featurize(c, out);
        if (keywords_cmd->parsed()) return cmd_keywords(c, out);
        if (train_cmd->parsed()) return cmd_train(c, out);
        if (evaluate_cmd->parsed()) return cmd_evaluate(c, out);
        if (pfi_cmd->parsed()) return cmd_pfi(c, out);
        if (plot_cmd->parsed()) return cmd_plot(c, out);
        if (run_cmd->parsed()) return cmd_run(c, out);
        if (synth_cmd->parsed()) return cmd_synth(c, synth, out);
        return io_or_usage;
    } catch (const ValidationError& e) {
        err << "validation failed:\n";
        for (const auto& v : e.violations()) err << "  " << v << "\n";
        return validation;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return validation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return validation;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return io_or_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return io_or_usage;
    }
}

}  // namespace narrisk::cli
