#include "textcascade/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>

namespace textcascade {

std::size_t DependencyTree::add_node(DepNode node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

void DependencyTree::add_edge(std::size_t head, std::size_t dependent, std::string relation) {
    if (head >= nodes_.size() || dependent >= nodes_.size()) {
        throw ContractViolation("edge (" + std::to_string(head) + ", " + std::to_string(dependent) +
                                ") outside a tree of " + std::to_string(nodes_.size()) + " nodes");
    }
    edges_.push_back({head, dependent, std::move(relation)});
}

void DependencyTree::append(const DependencyTree& other) {
    const std::size_t offset = nodes_.size();
    nodes_.insert(nodes_.end(), other.nodes_.begin(), other.nodes_.end());
    for (const auto& e : other.edges_) {
        edges_.push_back({e.head + offset, e.dependent + offset, e.relation});
    }
}

std::vector<std::string> DependencyTree::words() const {
    std::vector<std::string> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(n.word);
    return out;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

struct PendingToken {
    std::size_t head;
    std::string relation;
    std::size_t line_no;
};

}  // namespace

std::vector<DependencyTree> read_conllu(std::istream& in) {
    std::vector<DependencyTree> trees;
    DependencyTree current;
    std::vector<PendingToken> pending;
    std::size_t sentence_ordinal = 1;
    std::size_t line_no = 0;
    bool open = false;

    auto error = [&](std::size_t at, const std::string& what) {
        return ParseError("CoNLL-U sentence " + std::to_string(sentence_ordinal) + ", line " +
                          std::to_string(at) + ": " + what);
    };

    auto finish = [&] {
        if (!open) {
            current = DependencyTree();
            return;
        }
        for (std::size_t i = 0; i < pending.size(); ++i) {
            const auto& tok = pending[i];
            if (tok.head == 0) continue;
            if (tok.head > pending.size()) {
                throw error(tok.line_no, "HEAD " + std::to_string(tok.head) + " out of range for " +
                                             std::to_string(pending.size()) + " tokens");
            }
            current.add_edge(tok.head - 1, i, tok.relation);
        }
        trees.push_back(std::move(current));
        current = DependencyTree();
        pending.clear();
        open = false;
        ++sentence_ordinal;
    };

    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            finish();
            continue;
        }
        if (line.front() == '#') {
            constexpr std::string_view key = "sent_id";
            auto body = line.substr(1);
            body.remove_prefix(std::min(body.find_first_not_of(' '), body.size()));
            if (body.starts_with(key)) {
                auto rest = body.substr(key.size());
                const auto eq = rest.find('=');
                if (eq != std::string_view::npos) {
                    rest = rest.substr(eq + 1);
                    const auto b = rest.find_first_not_of(' ');
                    const auto e = rest.find_last_not_of(' ');
                    current.set_id(b == std::string_view::npos ? std::string()
                                                               : std::string(rest.substr(b, e - b + 1)));
                }
            }
            continue;
        }
        const auto cols = split_tabs(line);
        if (cols.size() < 8) {
            throw error(line_no, "expected at least 8 tab-separated columns, found " +
                                     std::to_string(cols.size()));
        }
        if (cols[0].find_first_of("-.") != std::string_view::npos) {
            continue;
        }
        open = true;
        std::size_t id = 0;
        if (std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), id).ec != std::errc() ||
            id != pending.size() + 1) {
            throw error(line_no, "unexpected token ID '" + std::string(cols[0]) + "'");
        }
        std::size_t head = 0;
        auto [ptr, ec] = std::from_chars(cols[6].data(), cols[6].data() + cols[6].size(), head);
        if (ec != std::errc() || ptr != cols[6].data() + cols[6].size()) {
            throw error(line_no, "non-integer HEAD '" + std::string(cols[6]) + "'");
        }
        current.add_node({std::string(cols[1]), std::string(cols[2]), std::string(cols[3])});
        pending.push_back({head, std::string(cols[7]), line_no});
    }
    finish();
    return trees;
}

void write_conllu(std::ostream& out, std::span<const DependencyTree> trees) {
    for (const auto& tree : trees) {
        if (!tree.id().empty()) out << "# sent_id = " << tree.id() << '\n';
        std::vector<std::size_t> head(tree.nodes().size(), 0);
        std::vector<std::string> rel(tree.nodes().size(), "root");
        for (const auto& e : tree.edges()) {
            head[e.dependent] = e.head + 1;
            rel[e.dependent] = e.relation;
        }
        for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
            const auto& n = tree.nodes()[i];
            out << (i + 1) << '\t' << n.word << '\t' << n.lemma << '\t' << n.pos << "\t_\t_\t"
                << head[i] << '\t' << rel[i] << "\t_\t_\n";
        }
        out << '\n';
    }
}

DependencyTree fallback_edges(std::span<const std::string> tokens) {
    DependencyTree tree;
    for (const auto& token : tokens) {
        tree.add_node({token, token, "X"});
    }
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        tree.add_edge(i, i + 1, "adj");
    }
    return tree;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos > start) tokens.emplace_back(text.substr(start, pos - start));
    }
    return tokens;
}

WeightPolicy::WeightPolicy()
    : WeightPolicy({{"NOUN", 2.0}, {"PROPN", 2.0}, {"VERB", 2.0}, {"ADJ", 2.0}}, 1.0) {}

WeightPolicy::WeightPolicy(std::map<std::string, double, std::less<>> weights, double default_weight)
    : weights_(std::move(weights)), default_weight_(default_weight) {
    if (!(default_weight_ > 0.0)) {
        throw ContractViolation("default word weight must be positive");
    }
    for (const auto& [tag, w] : weights_) {
        if (!(w > 0.0)) {
            throw ContractViolation("word weight for tag '" + tag + "' must be positive");
        }
    }
}

double WeightPolicy::weight(std::string_view pos) const {
    auto it = weights_.find(pos);
    return it == weights_.end() ? default_weight_ : it->second;
}

WeightPolicy WeightPolicy::scaled(double factor) const {
    auto weights = weights_;
    for (auto& [tag, w] : weights) w *= factor;
    return WeightPolicy(std::move(weights), default_weight_ * factor);
}

std::uint64_t WeightPolicy::digest() const {
    Digest digest;
    for (const auto& [tag, w] : weights_) {
        digest.update(tag);
        digest.update_pod(w);
    }
    digest.update_pod(default_weight_);
    return digest.value();
}

void FeatureBag::add(std::span<const double> vector) {
    if (vector.size() != width_) {
        throw ContractViolation("feature of length " + std::to_string(vector.size()) +
                                " added to a bag of width " + std::to_string(width_));
    }
    data_.insert(data_.end(), vector.begin(), vector.end());
}

FeatureBag generate_bag(const DependencyTree& tree, const WordVectorTable& table,
                        const WeightPolicy& policy) {
    const std::size_t d = table.dim();
    FeatureBag bag(2 * d);
    std::vector<double> feature(2 * d);
    for (const auto& edge : tree.edges()) {
        const auto& head = tree.head_of(edge);
        const auto& dep = tree.dependent_of(edge);
        const auto head_vec = table.lookup(head.word);
        const auto dep_vec = table.lookup(dep.word);
        const double head_w = policy.weight(head.pos);
        const double dep_w = policy.weight(dep.pos);
        for (std::size_t i = 0; i < d; ++i) {
            feature[i] = head_w * head_vec[i];
            feature[d + i] = dep_w * dep_vec[i];
        }
        bag.add(feature);
    }
    return bag;
}

}  // namespace textcascade
