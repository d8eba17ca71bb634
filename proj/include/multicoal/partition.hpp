#pragma once

// Labelled d-type partitions of a finite ground set
// { (type, index) : 0 <= type < d, 0 <= index < n_type }.

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "multicoal/rates.hpp"

namespace multicoal {

struct GroundElement {
    int type;
    int index;
    bool operator==(const GroundElement& o) const { return type == o.type && index == o.index; }
    bool operator<(const GroundElement& o) const {
        return type != o.type ? type < o.type : index < o.index;
    }
};

class TypedPartition {
public:
    struct Block {
        int colour;
        std::vector<GroundElement> members;  // kept sorted
    };

    TypedPartition(int d, std::vector<Block> blocks) : d_(d), blocks_(std::move(blocks)) {
        if (d_ < 1) throw std::invalid_argument("TypedPartition: d must be >= 1");
        std::set<GroundElement> seen;
        for (auto& b : blocks_) {
            if (b.colour < 0 || b.colour >= d_)
                throw std::invalid_argument("TypedPartition: block colour out of range");
            if (b.members.empty()) throw std::invalid_argument("TypedPartition: empty block");
            std::sort(b.members.begin(), b.members.end());
            for (const auto& e : b.members) {
                if (e.type < 0 || e.type >= d_)
                    throw std::invalid_argument("TypedPartition: element type out of range");
                if (!seen.insert(e).second)
                    throw std::invalid_argument("TypedPartition: blocks are not disjoint");
            }
        }
    }

    // Partition of [n] into singletons, each block coloured by its element's type.
    static TypedPartition singletons(const BlockCounts& n0) {
        std::vector<Block> blocks;
        for (int i = 0; i < n0.dim(); ++i)
            for (int p = 0; p < n0[i]; ++p) blocks.push_back({i, {{i, p}}});
        return TypedPartition(n0.dim(), std::move(blocks));
    }

    int dim() const { return d_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }

    BlockCounts counts() const {
        BlockCounts n = BlockCounts::zeros(d_);
        for (const auto& b : blocks_) ++n[b.colour];
        return n;
    }

    std::vector<GroundElement> ground_set() const {
        std::vector<GroundElement> g;
        for (const auto& b : blocks_) g.insert(g.end(), b.members.begin(), b.members.end());
        std::sort(g.begin(), g.end());
        return g;
    }

    // Restriction: intersect every block with `subset`, drop empty
    // intersections, keep colours.
    TypedPartition project(const std::vector<GroundElement>& subset) const {
        if (subset.empty()) throw std::invalid_argument("project: empty subset");
        const std::set<GroundElement> keep(subset.begin(), subset.end());
        std::vector<Block> blocks;
        for (const auto& b : blocks_) {
            Block nb{b.colour, {}};
            for (const auto& e : b.members)
                if (keep.count(e)) nb.members.push_back(e);
            if (!nb.members.empty()) blocks.push_back(std::move(nb));
        }
        if (blocks.empty()) throw std::invalid_argument("project: subset disjoint from ground set");
        return TypedPartition(d_, std::move(blocks));
    }

    // Relabel elements within each type by sigma[type] : index -> index.
    // Rejects anything that is not a per-type bijection.
    TypedPartition permute_within_types(const std::vector<std::vector<int>>& sigma) const {
        if (static_cast<int>(sigma.size()) != d_)
            throw std::invalid_argument("permute_within_types: need one permutation per type");
        for (const auto& s : sigma) {
            std::vector<int> sorted(s);
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < static_cast<int>(sorted.size()); ++i)
                if (sorted[i] != i)
                    throw std::invalid_argument("permute_within_types: not a permutation");
        }
        std::vector<Block> blocks;
        for (const auto& b : blocks_) {
            Block nb{b.colour, {}};
            for (const auto& e : b.members) {
                if (e.index >= static_cast<int>(sigma[e.type].size()))
                    throw std::invalid_argument("permute_within_types: permutation too short");
                nb.members.push_back({e.type, sigma[e.type][e.index]});
            }
            blocks.push_back(std::move(nb));
        }
        return TypedPartition(d_, std::move(blocks));
    }

private:
    int d_;
    std::vector<Block> blocks_;
};

}  // namespace multicoal
