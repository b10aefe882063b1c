#include <cmath>
#include <filesystem>
#include <fstream>

#include "textcascade/harness.hpp"

namespace textcascade {

namespace {

constexpr std::string_view kSignatureTags[] = {"NOUN", "VERB", "ADJ"};
constexpr std::string_view kFillerTags[] = {"DET", "ADP", "PRON", "AUX", "CCONJ"};

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    while (norm == 0.0) {
        norm = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm += x * x;
        }
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

std::string padded(std::size_t value, std::size_t width) {
    auto s = std::to_string(value);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

struct Word {
    std::string text;
    std::string_view pos;
};

DependencyTree random_tree(std::string id, std::vector<const Word*> words, Rng& rng) {
    rng.shuffle(words.begin(), words.end());
    DependencyTree tree(std::move(id));
    for (const auto* w : words) tree.add_node({w->text, w->text, std::string(w->pos)});
    for (std::size_t k = 1; k < words.size(); ++k) {
        tree.add_edge(static_cast<std::size_t>(rng.below(k)), k, "dep");
    }
    return tree;
}

std::string join_words(const DependencyTree& tree) {
    std::string text;
    for (const auto& node : tree.nodes()) {
        if (!text.empty()) text += ' ';
        text += node.word;
    }
    return text;
}

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& config) {
    if (config.classes < 2 || config.samples_per_class == 0 || config.dim == 0 ||
        config.signature_size == 0 || config.signature_per_text == 0) {
        throw ContractViolation("synthetic corpus needs two classes, samples, dim and signature words");
    }
    if (config.noise < 0.0 || config.noise > 1.0) throw ContractViolation("noise must lie in [0, 1]");

    Rng vectors(derive_seed(config.seed, "synth-vectors"));
    Rng texts(derive_seed(config.seed, "synth-texts"));
    auto table = std::make_shared<WordVectorTable>(config.dim);

    const std::size_t label_width = std::max<std::size_t>(5, std::to_string(config.classes - 1).size());
    std::vector<std::string> labels(config.classes);
    std::vector<std::vector<Word>> signatures(config.classes);
    std::vector<double> word(config.dim);
    for (std::size_t b = 0; b < config.classes; ++b) {
        labels[b] = "c" + padded(b, label_width);
        const auto direction = random_unit(vectors, config.dim);
        for (std::size_t j = 0; j < config.signature_size; ++j) {
            const auto jitter = random_unit(vectors, config.dim);
            double norm = 0.0;
            for (std::size_t k = 0; k < config.dim; ++k) {
                word[k] = direction[k] + config.spread * jitter[k];
                norm += word[k] * word[k];
            }
            norm = std::sqrt(norm);
            for (auto& x : word) x = norm > 0.0 ? x / norm : 0.0;
            Word w{"s" + std::to_string(b) + "_" + std::to_string(j), kSignatureTags[j % 3]};
            table->insert(w.text, word);
            signatures[b].push_back(std::move(w));
        }
    }
    std::vector<Word> fillers;
    for (std::size_t i = 0; i < config.vocab; ++i) {
        Word w{"n" + std::to_string(i), kFillerTags[i % 5]};
        table->insert(w.text, random_unit(vectors, config.dim));
        fillers.push_back(std::move(w));
    }

    const auto draw_words = [&](std::size_t b, double noise) {
        std::vector<const Word*> words;
        for (std::size_t k = 0; k < config.signature_per_text; ++k) {
            if (noise > 0.0 && texts.uniform() < noise) {
                const auto other = texts.below(config.classes);
                words.push_back(&signatures[other][texts.below(config.signature_size)]);
            } else {
                words.push_back(&signatures[b][texts.below(config.signature_size)]);
            }
        }
        for (std::size_t k = 0; k < config.filler_per_text && !fillers.empty(); ++k) {
            words.push_back(&fillers[texts.below(fillers.size())]);
        }
        return words;
    };

    SynthCorpus out;
    out.table = table;
    auto& corpus = out.corpus;
    const auto add = [&](std::string id, std::size_t b, Split split, double noise) {
        auto tree = random_tree(id, draw_words(b, noise), texts);
        CorpusRecord record;
        record.text = join_words(tree);
        record.text_id = std::move(id);
        record.label = labels[b];
        record.tree = std::move(tree);
        record.split = split;
        corpus.records.push_back(std::move(record));
    };
    for (std::size_t b = 0; b < config.classes; ++b) {
        for (std::size_t k = 0; k < config.samples_per_class; ++k) {
            add("train-" + labels[b] + "-" + std::to_string(k), b, Split::train, 0.0);
        }
    }
    for (std::size_t i = 0; i < config.valid_queries; ++i) {
        add("valid-" + padded(i, 6), texts.below(config.classes), Split::valid, config.noise);
    }
    for (std::size_t i = 0; i < config.test_queries; ++i) {
        add("test-" + padded(i, 6), texts.below(config.classes), Split::test, config.noise);
    }
    corpus.catalog = labels;
    return out;
}

void write_synth(const SynthCorpus& synth, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);
    {
        std::ofstream out(root / "corpus.tsv");
        write_corpus(out, synth.corpus);
    }
    {
        std::vector<DependencyTree> trees;
        for (const auto& r : synth.corpus.records) {
            if (r.tree) trees.push_back(*r.tree);
        }
        std::ofstream out(root / "parses.conllu");
        write_conllu(out, trees);
    }
    {
        std::ofstream out(root / "vectors.txt");
        synth.table->save(out);
    }
    {
        std::ofstream out(root / "classes.txt");
        for (const auto& label : synth.corpus.catalog) out << label << '\n';
    }
}

}  // namespace textcascade
