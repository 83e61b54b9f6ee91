#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "glore/error.hpp"
#include "glore/eval.hpp"
#include "glore/merge.hpp"
#include "glore/synth.hpp"
#include "glore/train.hpp"
#include "glore/tsv.hpp"

namespace glore {

/// Flat `key = value` text. '#' starts a comment; blank lines are ignored.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, std::string_view origin = "<config>") {
        KeyValueConfig cfg;
        std::size_t lineno = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos)
                end = text.size();
            std::string_view line = text.substr(start, end - start);
            start = end + 1;
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            cfg.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::filesystem::path& path) {
        if (!std::filesystem::exists(path))
            throw ConfigError("config file not found: " + path.string());
        return parse(tsv::read_file(path), path.string());
    }

    void set(std::string key, std::string value) {
        if (key.empty())
            throw ConfigError("empty config key");
        values_[std::move(key)] = std::move(value);
    }

    /// "key=value" from the command line.
    void apply_override(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
        set(std::string(trim(assignment.substr(0, eq))),
            std::string(trim(assignment.substr(eq + 1))));
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
            s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
            s.remove_suffix(1);
        return s;
    }

    std::map<std::string, std::string> values_;
};

/// Everything a pipeline run needs. All randomness derives from `seed`.
struct PipelineConfig {
    std::filesystem::path corpus;
    std::filesystem::path kb;
    std::filesystem::path contexts;
    std::filesystem::path base_scores_train;
    std::filesystem::path base_scores_test;
    std::filesystem::path holdout_kb;
    std::filesystem::path pretrained_embeddings;
    std::filesystem::path output_dir = "glore_out";
    std::uint64_t seed = 1;
    std::string na_relation = "NA";
    std::set<std::string> skip_stages;

    std::string normalization = "conditional";   // or "ppmi"
    std::optional<double> ppmi_alpha = 0.75;
    std::uint64_t min_row_sum = 1;
    bool count_na_pairs = true;
    bool allow_duplicates = true;

    std::string profile = "desk";
    TrainConfig train;
    std::size_t train_edges = 0;   // 0: scaled from the reference 300K / 321,447 ratio
    std::size_t val_edges = 0;     // 0: scaled from the reference 60K / 321,447 ratio
    bool train_lore = true;
    bool timing = false;

    std::size_t negatives = 4;
    MergeTrainOptions merge;

    std::vector<std::size_t> n_values{100, 300, 500, 700, 900, 1000};
    RecallDenominator recall = RecallDenominator::PairsInCandidates;

    SyntheticSpec synth;
    std::filesystem::path synth_dir = "synthetic";

    PipelineConfig() {
        train.record_time = false;
        synth.num_test_pairs = 500;
    }

    static PipelineConfig from(const KeyValueConfig& kv) {
        PipelineConfig c;
        // The profile resets the dimensions before explicit keys apply.
        if (auto it = kv.values().find("train.profile"); it != kv.values().end())
            c.set("train.profile", it->second);
        for (const auto& [key, value] : kv.values())
            if (key != "train.profile")
                c.set(key, value);
        return c;
    }

    /// Every key with its effective value, sorted by key.
    std::string canonical() const {
        std::string out;
        for (const auto& [key, field] : fields())
            out += key + '=' + field.get(*this) + '\n';
        return out;
    }

    void set(const std::string& key, const std::string& value) {
        const auto& f = fields();
        auto it = f.find(key);
        if (it == f.end())
            throw ConfigError("unknown config key '" + key + "'");
        try {
            it->second.set(*this, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError("bad value for '" + key + "': " + e.what());
        }
    }

    static std::vector<std::string> keys() {
        std::vector<std::string> out;
        for (const auto& [k, f] : fields())
            out.push_back(k);
        return out;
    }

private:
    struct Field {
        std::function<std::string(const PipelineConfig&)> get;
        std::function<void(PipelineConfig&, const std::string&)> set;
    };

    static std::uint64_t to_uint(const std::string& v) { return tsv::parse_uint(v, "integer"); }
    static double to_double(const std::string& v) { return tsv::parse_double(v, "number"); }
    static bool to_bool(const std::string& v) {
        if (v == "true" || v == "1" || v == "yes")
            return true;
        if (v == "false" || v == "0" || v == "no")
            return false;
        throw ConfigError("expected a boolean, got '" + v + "'");
    }
    static std::string from_bool(bool b) { return b ? "true" : "false"; }

    template <typename T>
    static std::string num(T v) {
        if constexpr (std::is_floating_point_v<T>)
            return tsv::format_double(v);
        else
            return std::to_string(v);
    }

    static const std::map<std::string, Field>& fields() {
        using C = PipelineConfig;
        auto path = [](std::filesystem::path C::*m) {
            return Field{[m](const C& c) { return (c.*m).string(); },
                         [m](C& c, const std::string& v) { c.*m = v; }};
        };
        auto uint_field = [](auto getter) {
            return Field{[getter](const C& c) { return num(*getter(const_cast<C&>(c))); },
                         [getter](C& c, const std::string& v) {
                             using T = std::remove_reference_t<decltype(*getter(c))>;
                             *getter(c) = static_cast<T>(to_uint(v));
                         }};
        };
        auto real_field = [](auto getter) {
            return Field{[getter](const C& c) { return num(*getter(const_cast<C&>(c))); },
                         [getter](C& c, const std::string& v) { *getter(c) = to_double(v); }};
        };
        auto bool_field = [](auto getter) {
            return Field{[getter](const C& c) { return from_bool(*getter(const_cast<C&>(c))); },
                         [getter](C& c, const std::string& v) { *getter(c) = to_bool(v); }};
        };

        static const std::map<std::string, Field> table = {
            {"corpus", path(&C::corpus)},
            {"kb", path(&C::kb)},
            {"contexts", path(&C::contexts)},
            {"base_scores_train", path(&C::base_scores_train)},
            {"base_scores_test", path(&C::base_scores_test)},
            {"holdout_kb", path(&C::holdout_kb)},
            {"pretrained_embeddings", path(&C::pretrained_embeddings)},
            {"output_dir", path(&C::output_dir)},
            {"seed", uint_field([](C& c) { return &c.seed; })},
            {"na_relation",
             {[](const C& c) { return c.na_relation; },
              [](C& c, const std::string& v) {
                  if (v.empty())
                      throw ConfigError("na_relation must not be empty");
                  c.na_relation = v;
                  c.synth.na_relation = v;
              }}},
            {"skip_stages",
             {[](const C& c) {
                  std::string s;
                  for (const auto& x : c.skip_stages)
                      s += (s.empty() ? "" : ",") + x;
                  return s;
              },
              [](C& c, const std::string& v) {
                  static const std::set<std::string> known = {"graph", "train", "score",
                                                              "merge", "eval", "report"};
                  c.skip_stages.clear();
                  for (auto part : tsv::split(v, ',')) {
                      if (part.empty())
                          continue;
                      if (!known.contains(std::string(part)))
                          throw ConfigError("unknown stage '" + std::string(part) + "'");
                      c.skip_stages.insert(std::string(part));
                  }
              }}},

            {"graph.normalization",
             {[](const C& c) { return c.normalization; },
              [](C& c, const std::string& v) {
                  if (v != "conditional" && v != "ppmi")
                      throw ConfigError("graph.normalization must be conditional or ppmi");
                  c.normalization = v;
              }}},
            {"graph.ppmi_alpha",
             {[](const C& c) { return c.ppmi_alpha ? num(*c.ppmi_alpha) : std::string("none"); },
              [](C& c, const std::string& v) {
                  c.ppmi_alpha = v == "none" ? std::nullopt : std::optional<double>(to_double(v));
              }}},
            {"graph.min_row_sum", uint_field([](C& c) { return &c.min_row_sum; })},
            {"graph.count_na_pairs", bool_field([](C& c) { return &c.count_na_pairs; })},
            {"graph.allow_duplicates", bool_field([](C& c) { return &c.allow_duplicates; })},

            {"train.profile",
             {[](const C& c) { return c.profile; },
              [](C& c, const std::string& v) {
                  if (v == "full") {
                      const auto p = TrainConfig::full_scale();
                      c.train.embed_size = p.embed_size;
                      c.train.state_size = p.state_size;
                      c.train.batch_size = p.batch_size;
                  } else if (v == "desk") {
                      const TrainConfig d;
                      c.train.embed_size = d.embed_size;
                      c.train.state_size = d.state_size;
                      c.train.batch_size = d.batch_size;
                  } else {
                      throw ConfigError("train.profile must be desk or full");
                  }
                  c.profile = v;
              }}},
            {"train.embed_size", uint_field([](C& c) { return &c.train.embed_size; })},
            {"train.state_size", uint_field([](C& c) { return &c.train.state_size; })},
            {"train.batch_size", uint_field([](C& c) { return &c.train.batch_size; })},
            {"train.learning_rate", real_field([](C& c) { return &c.train.learning_rate; })},
            {"train.adam_beta1", real_field([](C& c) { return &c.train.adam_beta1; })},
            {"train.adam_beta2", real_field([](C& c) { return &c.train.adam_beta2; })},
            {"train.adam_epsilon", real_field([](C& c) { return &c.train.adam_epsilon; })},
            {"train.max_epochs", uint_field([](C& c) { return &c.train.max_epochs; })},
            {"train.patience", uint_field([](C& c) { return &c.train.patience; })},
            {"train.clip_norm", real_field([](C& c) { return &c.train.clip_norm; })},
            {"train.init_scale", real_field([](C& c) { return &c.train.init_scale; })},
            {"train.threads", uint_field([](C& c) { return &c.train.threads; })},
            {"train.timing", bool_field([](C& c) { return &c.timing; })},
            {"train.train_edges", uint_field([](C& c) { return &c.train_edges; })},
            {"train.val_edges", uint_field([](C& c) { return &c.val_edges; })},
            {"train.lore", bool_field([](C& c) { return &c.train_lore; })},

            {"merge.negatives", uint_field([](C& c) { return &c.negatives; })},
            {"merge.learning_rate", real_field([](C& c) { return &c.merge.learning_rate; })},
            {"merge.epochs", uint_field([](C& c) { return &c.merge.epochs; })},
            {"merge.batch_size", uint_field([](C& c) { return &c.merge.batch_size; })},
            {"merge.validation_fraction",
             real_field([](C& c) { return &c.merge.validation_fraction; })},
            {"eval.n_values",
             {[](const C& c) {
                  std::string s;
                  for (auto n : c.n_values)
                      s += (s.empty() ? "" : ",") + std::to_string(n);
                  return s;
              },
              [](C& c, const std::string& v) {
                  c.n_values.clear();
                  for (auto part : tsv::split(v, ','))
                      if (!part.empty())
                          c.n_values.push_back(tsv::parse_uint(part, "eval.n_values"));
              }}},
            {"eval.recall",
             {[](const C& c) {
                  return std::string(c.recall == RecallDenominator::RawHoldout ? "raw" : "pairs");
              },
              [](C& c, const std::string& v) {
                  if (v == "pairs")
                      c.recall = RecallDenominator::PairsInCandidates;
                  else if (v == "raw")
                      c.recall = RecallDenominator::RawHoldout;
                  else
                      throw ConfigError("eval.recall must be pairs or raw");
              }}},

            {"synth.output_dir", path(&C::synth_dir)},
            {"synth.num_kb_relations", uint_field([](C& c) { return &c.synth.num_kb_relations; })},
            {"synth.num_textual_relations",
             uint_field([](C& c) { return &c.synth.num_textual_relations; })},
            {"synth.num_sentences", uint_field([](C& c) { return &c.synth.num_sentences; })},
            {"synth.num_entity_pairs", uint_field([](C& c) { return &c.synth.num_entity_pairs; })},
            {"synth.noise_rate", real_field([](C& c) { return &c.synth.noise_rate; })},
            {"synth.zipf_exponent", real_field([](C& c) { return &c.synth.zipf_exponent; })},
            {"synth.num_test_pairs", uint_field([](C& c) { return &c.synth.num_test_pairs; })},
            {"synth.max_contexts", uint_field([](C& c) { return &c.synth.max_contexts; })},
            {"synth.base_corruption", real_field([](C& c) { return &c.synth.base_corruption; })},
        };
        return table;
    }
};

} // namespace glore
