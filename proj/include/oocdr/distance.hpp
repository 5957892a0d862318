#pragma once

#include <algorithm>
#include <queue>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "oocdr/types.hpp"

namespace oocdr {

/// Squared Euclidean distance accumulated in ascending coordinate order.
template <typename A, typename B>
double squared_distance(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
    double s = 0;
    for (Index c = 0; c < a.size(); ++c) {
        const double t = static_cast<double>(a(c)) - static_cast<double>(b(c));
        s += t * t;
    }
    return s;
}

/// Squared distances from `x` to every row of `points`.
template <typename X, typename P>
Vector<double> squared_distances_to_rows(const Eigen::DenseBase<X>& x, const Eigen::DenseBase<P>& points) {
    Vector<double> out(points.rows());
    for (Index j = 0; j < points.rows(); ++j) out(j) = squared_distance(x, points.row(j));
    return out;
}

/// Neighbor candidate ordered by (distance, index); smaller is nearer.
struct Neighbor {
    double distance;
    Index index;
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    }
};

/// Bounded max-heap keeping the k nearest candidates seen so far.
class NeighborHeap {
public:
    explicit NeighborHeap(Index k = 0) : k_(k) { heap_.reserve(static_cast<std::size_t>(k)); }

    void reset(Index k) {
        k_ = k;
        heap_.clear();
    }

    void offer(double distance, Index index) {
        const Neighbor n{distance, index};
        if (static_cast<Index>(heap_.size()) < k_) {
            heap_.push_back(n);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (k_ > 0 && n < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = n;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    /// Neighbors sorted nearest first.
    std::vector<Neighbor> sorted() const {
        auto out = heap_;
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    Index k_;
    std::vector<Neighbor> heap_;
};

/// The k smallest entries of `distances` (ties by ascending index).
inline std::vector<Neighbor> k_smallest(const Vector<double>& distances, Index k) {
    NeighborHeap heap(std::min(k, distances.size()));
    for (Index j = 0; j < distances.size(); ++j) heap.offer(distances(j), j);
    return heap.sorted();
}

}  // namespace oocdr
