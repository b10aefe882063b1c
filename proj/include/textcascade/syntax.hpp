#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "textcascade/common.hpp"
#include "textcascade/embeddings.hpp"

namespace textcascade {

struct DepNode {
    std::string word;
    std::string lemma;
    std::string pos;  // coarse (universal) part-of-speech tag
};

/// Directed labeled edge between two nodes of the same tree, head -> dependent.
struct DepEdge {
    std::size_t head = 0;       // node position
    std::size_t dependent = 0;  // node position
    std::string relation;
};

/// Nodes plus labeled directed edges. A tree built from several sentences of
/// one text is a forest; nothing downstream needs connectivity.
class DependencyTree {
public:
    DependencyTree() = default;
    explicit DependencyTree(std::string id) : id_(std::move(id)) {}

    std::size_t add_node(DepNode node);
    /// Throws ContractViolation if either endpoint is out of range.
    void add_edge(std::size_t head, std::size_t dependent, std::string relation);

    /// Appends the nodes and edges of `other`, keeping them disjoint.
    void append(const DependencyTree& other);

    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }
    const std::vector<DepNode>& nodes() const { return nodes_; }
    const std::vector<DepEdge>& edges() const { return edges_; }
    const DepNode& head_of(const DepEdge& e) const { return nodes_[e.head]; }
    const DepNode& dependent_of(const DepEdge& e) const { return nodes_[e.dependent]; }

    /// Surface words in node order.
    std::vector<std::string> words() const;

private:
    std::string id_;
    std::vector<DepNode> nodes_;
    std::vector<DepEdge> edges_;
};

class ParseError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Reads CoNLL-U. Consumes ID, FORM, LEMMA, UPOS, HEAD and DEPREL; skips
/// comments, multiword ranges and empty nodes. A `# sent_id = X` comment
/// becomes the tree id. Throws ParseError naming the sentence ordinal and
/// line on a malformed or out-of-range HEAD.
std::vector<DependencyTree> read_conllu(std::istream& in);

/// Writes trees back out as CoNLL-U. Every node must have at most one
/// incoming edge for the output to be valid.
void write_conllu(std::ostream& out, std::span<const DependencyTree> trees);

/// Adjacency chain over the tokens, for texts without a parse.
DependencyTree fallback_edges(std::span<const std::string> tokens);

/// Whitespace tokenization.
std::vector<std::string> tokenize(std::string_view text);

/// Per-tag word weights for feature concatenation.
class WeightPolicy {
public:
    /// NOUN, PROPN, VERB and ADJ weigh 2.0; everything else 1.0.
    WeightPolicy();
    WeightPolicy(std::map<std::string, double, std::less<>> weights, double default_weight);

    double weight(std::string_view pos) const;
    double default_weight() const { return default_weight_; }
    const std::map<std::string, double, std::less<>>& weights() const { return weights_; }

    WeightPolicy scaled(double factor) const;
    std::uint64_t digest() const;

private:
    std::map<std::string, double, std::less<>> weights_;
    double default_weight_;
};

/// Multiset of equal-length feature vectors, stored row-major.
class FeatureBag {
public:
    FeatureBag() = default;
    explicit FeatureBag(std::size_t width) : width_(width) {}

    std::size_t width() const { return width_; }
    std::size_t size() const { return width_ == 0 ? 0 : data_.size() / width_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * width_, width_}; }
    std::span<const double> data() const { return data_; }

    /// Throws ContractViolation on a width mismatch.
    void add(std::span<const double> vector);

private:
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Bag of syntactic features: one concat(w_head * vec(head), w_dep * vec(dep))
/// per edge, head first. Duplicated edges give duplicated rows.
FeatureBag generate_bag(const DependencyTree& tree, const WordVectorTable& table,
                        const WeightPolicy& policy);

}  // namespace textcascade
