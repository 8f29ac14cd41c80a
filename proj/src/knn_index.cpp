#include "stg/knn_index.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <utility>

namespace stg {
namespace {

constexpr std::uint32_t kLeafSize = 8;

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index), compared lexicographically

// Bounded max-heap holding the k best candidates; top() is the worst kept.
class BestK {
  public:
    explicit BestK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    bool full() const { return heap_.size() == k_; }
    double worst() const { return heap_.front().first; }

    void offer(double d2, std::size_t idx) {
        const Candidate c{d2, idx};
        if (!full()) {
            heap_.push_back(c);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (c < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = c;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    std::vector<std::size_t> sorted_indices() {
        std::sort_heap(heap_.begin(), heap_.end());
        std::vector<std::size_t> out(heap_.size());
        for (std::size_t i = 0; i < heap_.size(); ++i) out[i] = heap_[i].second;
        return out;
    }

  private:
    std::size_t k_;
    std::vector<Candidate> heap_;
};

}  // namespace

KnnIndex::KnnIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw std::invalid_argument("cannot index an empty point set");
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KnnIndex::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = points_[a][axis], cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
}

std::vector<std::size_t> KnnIndex::search(const Vec3& query, std::size_t k, std::optional<std::size_t> skip) const {
    const std::size_t available = points_.size() - (skip ? 1 : 0);
    if (k > available) {
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(available) +
                                    " available points");
    }
    BestK best(k);
    if (k == 0) return {};

    // Depth-first descent, nearer child first. Subtrees are pruned only when
    // their bound is strictly worse, so equal-distance ties are never lost.
    auto visit = [&](auto&& self, std::int32_t id) -> void {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.axis < 0) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const std::size_t idx = order_[i];
                if (skip && idx == *skip) continue;
                best.offer((points_[idx] - query).squaredNorm(), idx);
            }
            return;
        }
        const double diff = query[n.axis] - n.split;
        const std::int32_t near = diff < 0.0 ? n.left : n.right;
        const std::int32_t far = diff < 0.0 ? n.right : n.left;
        self(self, near);
        if (!best.full() || diff * diff <= best.worst()) self(self, far);
    };
    visit(visit, 0);
    return best.sorted_indices();
}

std::vector<std::size_t> KnnIndex::knn(const Vec3& query, std::size_t k) const {
    return search(query, k, std::nullopt);
}

std::vector<std::size_t> KnnIndex::knn_excluding(std::size_t self, std::size_t k) const {
    if (self >= points_.size()) throw std::out_of_range("point index out of range");
    return search(points_[self], k, self);
}

std::vector<std::size_t> knn_brute_force(std::span<const Vec3> points, const Vec3& query, std::size_t k,
                                         std::optional<std::size_t> skip) {
    const std::size_t available = points.size() - (skip && *skip < points.size() ? 1 : 0);
    if (k > available) throw std::invalid_argument("k exceeds the available points");
    std::vector<Candidate> all;
    all.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (skip && i == *skip) continue;
        all.emplace_back((points[i] - query).squaredNorm(), i);
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = all[i].second;
    return out;
}

std::vector<std::size_t> knn_all(const KnnIndex& index, std::size_t k, bool exclude_self, Exec exec) {
    const std::size_t n = index.size();
    std::vector<std::size_t> out(n * k);
    STG_OMP_FOR_IF(is_parallel(exec))
    for (std::size_t i = 0; i < n; ++i) {
        const auto nn = exclude_self ? index.knn_excluding(i, k) : index.knn(index.point(i), k);
        std::copy(nn.begin(), nn.end(), out.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    return out;
}

double mean_spacing(const KnnIndex& index, Exec exec) {
    const std::size_t n = index.size();
    if (n < 2) return 0.0;
    const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(chunks, 0.0);
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = c * kReduceChunk, hi = std::min(n, lo + kReduceChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += (index.point(index.knn_excluding(i, 1)[0]) - index.point(i)).norm();
        partial[c] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total / static_cast<double>(n);
}

std::vector<std::size_t> farthest_point_sample_from(std::span<const Vec3> points, std::size_t m, std::size_t first,
                                                    Exec exec) {
    const std::size_t n = points.size();
    if (m > n) throw std::invalid_argument("cannot pick " + std::to_string(m) + " centers from " + std::to_string(n) + " points");
    if (m == 0) return {};
    if (first >= n) throw std::out_of_range("first center out of range");

    std::vector<std::size_t> chosen;
    chosen.reserve(m);
    chosen.push_back(first);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = (points[i] - points[first]).squaredNorm();
    dist[first] = -1.0;  // chosen points carry -1 so they are never picked again

    const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
    std::vector<Candidate> chunk_best(chunks);
    while (chosen.size() < m) {
        const Vec3 last = points[chosen.back()];
        STG_OMP_FOR_STATIC_IF(is_parallel(exec))
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t lo = c * kReduceChunk, hi = std::min(n, lo + kReduceChunk);
            Candidate b{-2.0, lo};
            for (std::size_t i = lo; i < hi; ++i) {
                if (chosen.size() > 1) dist[i] = std::min(dist[i], (points[i] - last).squaredNorm());
                if (dist[i] > b.first) b = {dist[i], i};
            }
            chunk_best[c] = b;
        }
        Candidate best = chunk_best[0];
        for (std::size_t c = 1; c < chunks; ++c) {
            if (chunk_best[c].first > best.first) best = chunk_best[c];
        }
        chosen.push_back(best.second);
        dist[best.second] = -1.0;
    }
    return chosen;
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t m, std::uint64_t seed,
                                               Exec exec) {
    if (points.empty() || m > points.size()) {
        throw std::invalid_argument("cannot pick " + std::to_string(m) + " centers from " + std::to_string(points.size()) + " points");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    return farthest_point_sample_from(points, m, pick(rng), exec);
}

}  // namespace stg
