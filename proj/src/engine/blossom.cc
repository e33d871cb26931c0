// Copyright 2026 Fusematch Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fusematch/engine/blossom.h"

#include <algorithm>
#include <stdexcept>

namespace fm {

namespace {

// Vertices are 0..n-1, non-trivial blossoms n..2n-1. Edge k has endpoints
// 2k (its i side) and 2k+1 (its j side); endpoint[p] is the vertex at p.
// Labels: 0 free, 1 S (outer), 2 T (inner); bit 4 marks blossoms visited by
// scan_blossom.
class Solver {
   public:
    Solver(int32_t n, std::span<const IntegerEdge> edges, bool max_cardinality)
        : n_(n), edges_(edges), max_cardinality_(max_cardinality) {
    }

    std::vector<int32_t> run();

   private:
    int64_t slack(int32_t k) const {
        const auto &e = edges_[k];
        return dual_[e.i] + dual_[e.j] - 2 * e.weight;
    }

    static int32_t wrap(int32_t j, size_t size) {
        int32_t s = (int32_t)size;
        return ((j % s) + s) % s;
    }

    void leaves(int32_t b, std::vector<int32_t> &out) const {
        if (b < n_) {
            out.push_back(b);
            return;
        }
        for (int32_t t : childs_[b]) {
            leaves(t, out);
        }
    }

    std::vector<int32_t> leaves(int32_t b) const {
        std::vector<int32_t> out;
        leaves(b, out);
        return out;
    }

    void assign_label(int32_t w, int32_t t, int32_t p);
    int32_t scan_blossom(int32_t v, int32_t w);
    void add_blossom(int32_t base, int32_t k);
    void expand_blossom(int32_t b, bool endstage);
    void augment_blossom(int32_t b, int32_t v);
    void augment_matching(int32_t k);

    int32_t n_;
    std::span<const IntegerEdge> edges_;
    bool max_cardinality_;

    std::vector<int32_t> endpoint_;
    std::vector<std::vector<int32_t>> neighbend_;
    std::vector<int32_t> mate_;
    std::vector<int32_t> label_;
    std::vector<int32_t> labelend_;
    std::vector<int32_t> inblossom_;
    std::vector<int32_t> parent_;
    std::vector<std::vector<int32_t>> childs_;
    std::vector<int32_t> base_;
    std::vector<std::vector<int32_t>> endps_;
    std::vector<int32_t> bestedge_;
    std::vector<std::vector<int32_t>> blossom_bestedges_;
    std::vector<char> has_blossom_bestedges_;
    std::vector<int32_t> unused_;
    std::vector<int64_t> dual_;
    std::vector<char> allowedge_;
    std::vector<int32_t> queue_;
};

void Solver::assign_label(int32_t w, int32_t t, int32_t p) {
    int32_t b = inblossom_[w];
    label_[w] = label_[b] = t;
    labelend_[w] = labelend_[b] = p;
    bestedge_[w] = bestedge_[b] = -1;
    if (t == 1) {
        leaves(b, queue_);
    } else if (t == 2) {
        int32_t base = base_[b];
        assign_label(endpoint_[mate_[base]], 1, mate_[base] ^ 1);
    }
}

int32_t Solver::scan_blossom(int32_t v, int32_t w) {
    std::vector<int32_t> path;
    int32_t base = -1;
    while (v != -1 || w != -1) {
        int32_t b = inblossom_[v];
        if (label_[b] & 4) {
            base = base_[b];
            break;
        }
        path.push_back(b);
        label_[b] = 5;
        if (labelend_[b] == -1) {
            v = -1;
        } else {
            v = endpoint_[labelend_[b]];
            b = inblossom_[v];
            v = endpoint_[labelend_[b]];
        }
        if (w != -1) {
            std::swap(v, w);
        }
    }
    for (int32_t b : path) {
        label_[b] = 1;
    }
    return base;
}

void Solver::add_blossom(int32_t base, int32_t k) {
    int32_t v = edges_[k].i;
    int32_t w = edges_[k].j;
    int32_t bb = inblossom_[base];
    int32_t bv = inblossom_[v];
    int32_t bw = inblossom_[w];
    int32_t b = unused_.back();
    unused_.pop_back();
    base_[b] = base;
    parent_[b] = -1;
    parent_[bb] = b;
    auto &path = childs_[b];
    auto &endps = endps_[b];
    path.clear();
    endps.clear();
    while (bv != bb) {
        parent_[bv] = b;
        path.push_back(bv);
        endps.push_back(labelend_[bv]);
        v = endpoint_[labelend_[bv]];
        bv = inblossom_[v];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
        parent_[bw] = b;
        path.push_back(bw);
        endps.push_back(labelend_[bw] ^ 1);
        w = endpoint_[labelend_[bw]];
        bw = inblossom_[w];
    }
    label_[b] = 1;
    labelend_[b] = labelend_[bb];
    dual_[b] = 0;
    for (int32_t leaf : leaves(b)) {
        if (label_[inblossom_[leaf]] == 2) {
            queue_.push_back(leaf);
        }
        inblossom_[leaf] = b;
    }

    std::vector<int32_t> bestedgeto(2 * n_, -1);
    for (int32_t child : childs_[b]) {
        std::vector<std::vector<int32_t>> nblists;
        if (!has_blossom_bestedges_[child]) {
            for (int32_t leaf : leaves(child)) {
                std::vector<int32_t> list;
                for (int32_t p : neighbend_[leaf]) {
                    list.push_back(p / 2);
                }
                nblists.push_back(std::move(list));
            }
        } else {
            nblists.push_back(blossom_bestedges_[child]);
        }
        for (const auto &nblist : nblists) {
            for (int32_t kk : nblist) {
                int32_t i = edges_[kk].i;
                int32_t j = edges_[kk].j;
                if (inblossom_[j] == b) {
                    std::swap(i, j);
                }
                int32_t bj = inblossom_[j];
                if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(kk) < slack(bestedgeto[bj]))) {
                    bestedgeto[bj] = kk;
                }
            }
        }
        blossom_bestedges_[child].clear();
        has_blossom_bestedges_[child] = 0;
        bestedge_[child] = -1;
    }
    blossom_bestedges_[b].clear();
    for (int32_t kk : bestedgeto) {
        if (kk != -1) {
            blossom_bestedges_[b].push_back(kk);
        }
    }
    has_blossom_bestedges_[b] = 1;
    bestedge_[b] = -1;
    for (int32_t kk : blossom_bestedges_[b]) {
        if (bestedge_[b] == -1 || slack(kk) < slack(bestedge_[b])) {
            bestedge_[b] = kk;
        }
    }
}

void Solver::expand_blossom(int32_t b, bool endstage) {
    // Copy: recursive expansion mutates childs_ of the children only.
    std::vector<int32_t> children = childs_[b];
    for (int32_t s : children) {
        parent_[s] = -1;
        if (s < n_) {
            inblossom_[s] = s;
        } else if (endstage && dual_[s] == 0) {
            expand_blossom(s, endstage);
        } else {
            for (int32_t leaf : leaves(s)) {
                inblossom_[leaf] = s;
            }
        }
    }
    if (!endstage && label_[b] == 2) {
        const auto &ch = childs_[b];
        const auto &ep = endps_[b];
        int32_t entrychild = inblossom_[endpoint_[labelend_[b] ^ 1]];
        int32_t j = (int32_t)(std::find(ch.begin(), ch.end(), entrychild) - ch.begin());
        int32_t jstep;
        int32_t endptrick;
        if (j & 1) {
            j -= (int32_t)ch.size();
            jstep = 1;
            endptrick = 0;
        } else {
            jstep = -1;
            endptrick = 1;
        }
        int32_t p = labelend_[b];
        while (j != 0) {
            label_[endpoint_[p ^ 1]] = 0;
            label_[endpoint_[ep[wrap(j - endptrick, ep.size())] ^ endptrick ^ 1]] = 0;
            assign_label(endpoint_[p ^ 1], 2, p);
            allowedge_[ep[wrap(j - endptrick, ep.size())] / 2] = 1;
            j += jstep;
            p = ep[wrap(j - endptrick, ep.size())] ^ endptrick;
            allowedge_[p / 2] = 1;
            j += jstep;
        }
        int32_t bv = ch[wrap(j, ch.size())];
        label_[endpoint_[p ^ 1]] = label_[bv] = 2;
        labelend_[endpoint_[p ^ 1]] = labelend_[bv] = p;
        bestedge_[bv] = -1;
        j += jstep;
        while (ch[wrap(j, ch.size())] != entrychild) {
            bv = ch[wrap(j, ch.size())];
            if (label_[bv] == 1) {
                j += jstep;
                continue;
            }
            int32_t found = -1;
            for (int32_t leaf : leaves(bv)) {
                if (label_[leaf] != 0) {
                    found = leaf;
                    break;
                }
            }
            if (found != -1) {
                label_[found] = 0;
                label_[endpoint_[mate_[base_[bv]]]] = 0;
                assign_label(found, 2, labelend_[found]);
            }
            j += jstep;
        }
    }
    label_[b] = labelend_[b] = -1;
    childs_[b].clear();
    endps_[b].clear();
    base_[b] = -1;
    blossom_bestedges_[b].clear();
    has_blossom_bestedges_[b] = 0;
    bestedge_[b] = -1;
    unused_.push_back(b);
}

void Solver::augment_blossom(int32_t b, int32_t v) {
    int32_t t = v;
    while (parent_[t] != b) {
        t = parent_[t];
    }
    if (t >= n_) {
        augment_blossom(t, v);
    }
    auto &ch = childs_[b];
    auto &ep = endps_[b];
    int32_t i = (int32_t)(std::find(ch.begin(), ch.end(), t) - ch.begin());
    int32_t j = i;
    int32_t jstep;
    int32_t endptrick;
    if (i & 1) {
        j -= (int32_t)ch.size();
        jstep = 1;
        endptrick = 0;
    } else {
        jstep = -1;
        endptrick = 1;
    }
    while (j != 0) {
        j += jstep;
        t = ch[wrap(j, ch.size())];
        int32_t p = ep[wrap(j - endptrick, ep.size())] ^ endptrick;
        if (t >= n_) {
            augment_blossom(t, endpoint_[p]);
        }
        j += jstep;
        t = ch[wrap(j, ch.size())];
        if (t >= n_) {
            augment_blossom(t, endpoint_[p ^ 1]);
        }
        mate_[endpoint_[p]] = p ^ 1;
        mate_[endpoint_[p ^ 1]] = p;
    }
    std::rotate(ch.begin(), ch.begin() + i, ch.end());
    std::rotate(ep.begin(), ep.begin() + i, ep.end());
    base_[b] = base_[ch[0]];
}

void Solver::augment_matching(int32_t k) {
    int32_t v = edges_[k].i;
    int32_t w = edges_[k].j;
    const std::pair<int32_t, int32_t> starts[2] = {{v, 2 * k + 1}, {w, 2 * k}};
    for (auto [s, p] : starts) {
        while (true) {
            int32_t bs = inblossom_[s];
            if (bs >= n_) {
                augment_blossom(bs, s);
            }
            mate_[s] = p;
            if (labelend_[bs] == -1) {
                break;
            }
            int32_t t = endpoint_[labelend_[bs]];
            int32_t bt = inblossom_[t];
            s = endpoint_[labelend_[bt]];
            int32_t j = endpoint_[labelend_[bt] ^ 1];
            if (bt >= n_) {
                augment_blossom(bt, j);
            }
            mate_[j] = labelend_[bt];
            p = labelend_[bt] ^ 1;
        }
    }
}

std::vector<int32_t> Solver::run() {
    const int32_t nedge = (int32_t)edges_.size();
    if (nedge == 0) {
        return std::vector<int32_t>(n_, -1);
    }
    int64_t maxweight = 0;
    for (const auto &e : edges_) {
        if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_ || e.i == e.j) {
            throw std::invalid_argument("invalid edge for weighted matching");
        }
        maxweight = std::max(maxweight, e.weight);
    }
    endpoint_.resize(2 * nedge);
    for (int32_t p = 0; p < 2 * nedge; p++) {
        endpoint_[p] = (p % 2 == 0) ? edges_[p / 2].i : edges_[p / 2].j;
    }
    neighbend_.assign(n_, {});
    for (int32_t k = 0; k < nedge; k++) {
        neighbend_[edges_[k].i].push_back(2 * k + 1);
        neighbend_[edges_[k].j].push_back(2 * k);
    }
    mate_.assign(n_, -1);
    label_.assign(2 * n_, 0);
    labelend_.assign(2 * n_, -1);
    inblossom_.resize(n_);
    for (int32_t v = 0; v < n_; v++) {
        inblossom_[v] = v;
    }
    parent_.assign(2 * n_, -1);
    childs_.assign(2 * n_, {});
    base_.assign(2 * n_, -1);
    for (int32_t v = 0; v < n_; v++) {
        base_[v] = v;
    }
    endps_.assign(2 * n_, {});
    bestedge_.assign(2 * n_, -1);
    blossom_bestedges_.assign(2 * n_, {});
    has_blossom_bestedges_.assign(2 * n_, 0);
    unused_.clear();
    for (int32_t b = n_; b < 2 * n_; b++) {
        unused_.push_back(b);
    }
    dual_.assign(2 * n_, 0);
    for (int32_t v = 0; v < n_; v++) {
        dual_[v] = maxweight;
    }
    allowedge_.assign(nedge, 0);
    queue_.clear();

    for (int32_t stage = 0; stage < n_; stage++) {
        std::fill(label_.begin(), label_.end(), 0);
        std::fill(bestedge_.begin(), bestedge_.end(), -1);
        for (int32_t b = n_; b < 2 * n_; b++) {
            blossom_bestedges_[b].clear();
            has_blossom_bestedges_[b] = 0;
        }
        std::fill(allowedge_.begin(), allowedge_.end(), 0);
        queue_.clear();
        for (int32_t v = 0; v < n_; v++) {
            if (mate_[v] == -1 && label_[inblossom_[v]] == 0) {
                assign_label(v, 1, -1);
            }
        }
        bool augmented = false;
        while (true) {
            while (!queue_.empty() && !augmented) {
                int32_t v = queue_.back();
                queue_.pop_back();
                for (int32_t p : neighbend_[v]) {
                    int32_t k = p / 2;
                    int32_t w = endpoint_[p];
                    if (inblossom_[v] == inblossom_[w]) {
                        continue;
                    }
                    int64_t kslack = 0;
                    if (!allowedge_[k]) {
                        kslack = slack(k);
                        if (kslack <= 0) {
                            allowedge_[k] = 1;
                        }
                    }
                    if (allowedge_[k]) {
                        if (label_[inblossom_[w]] == 0) {
                            assign_label(w, 2, p ^ 1);
                        } else if (label_[inblossom_[w]] == 1) {
                            int32_t base = scan_blossom(v, w);
                            if (base >= 0) {
                                add_blossom(base, k);
                            } else {
                                augment_matching(k);
                                augmented = true;
                                break;
                            }
                        } else if (label_[w] == 0) {
                            label_[w] = 2;
                            labelend_[w] = p ^ 1;
                        }
                    } else if (label_[inblossom_[w]] == 1) {
                        int32_t b = inblossom_[v];
                        if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) {
                            bestedge_[b] = k;
                        }
                    } else if (label_[w] == 0) {
                        if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) {
                            bestedge_[w] = k;
                        }
                    }
                }
            }
            if (augmented) {
                break;
            }

            int32_t deltatype = -1;
            int64_t delta = 0;
            int32_t deltaedge = -1;
            int32_t deltablossom = -1;
            if (!max_cardinality_) {
                deltatype = 1;
                delta = *std::min_element(dual_.begin(), dual_.begin() + n_);
            }
            for (int32_t v = 0; v < n_; v++) {
                if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
                    int64_t d = slack(bestedge_[v]);
                    if (deltatype == -1 || d < delta) {
                        delta = d;
                        deltatype = 2;
                        deltaedge = bestedge_[v];
                    }
                }
            }
            for (int32_t b = 0; b < 2 * n_; b++) {
                if (parent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
                    int64_t kslack = slack(bestedge_[b]);
                    if (kslack % 2 != 0) {
                        throw std::logic_error("odd slack between outer blossoms");
                    }
                    int64_t d = kslack / 2;
                    if (deltatype == -1 || d < delta) {
                        delta = d;
                        deltatype = 3;
                        deltaedge = bestedge_[b];
                    }
                }
            }
            for (int32_t b = n_; b < 2 * n_; b++) {
                if (base_[b] >= 0 && parent_[b] == -1 && label_[b] == 2 && (deltatype == -1 || dual_[b] < delta)) {
                    delta = dual_[b];
                    deltatype = 4;
                    deltablossom = b;
                }
            }
            if (deltatype == -1) {
                deltatype = 1;
                delta = std::max<int64_t>(0, *std::min_element(dual_.begin(), dual_.begin() + n_));
            }

            for (int32_t v = 0; v < n_; v++) {
                if (label_[inblossom_[v]] == 1) {
                    dual_[v] -= delta;
                } else if (label_[inblossom_[v]] == 2) {
                    dual_[v] += delta;
                }
            }
            for (int32_t b = n_; b < 2 * n_; b++) {
                if (base_[b] >= 0 && parent_[b] == -1) {
                    if (label_[b] == 1) {
                        dual_[b] += delta;
                    } else if (label_[b] == 2) {
                        dual_[b] -= delta;
                    }
                }
            }

            if (deltatype == 1) {
                break;
            } else if (deltatype == 2) {
                allowedge_[deltaedge] = 1;
                int32_t i = edges_[deltaedge].i;
                int32_t j = edges_[deltaedge].j;
                if (label_[inblossom_[i]] == 0) {
                    std::swap(i, j);
                }
                queue_.push_back(i);
            } else if (deltatype == 3) {
                allowedge_[deltaedge] = 1;
                queue_.push_back(edges_[deltaedge].i);
            } else {
                expand_blossom(deltablossom, false);
            }
        }
        if (!augmented) {
            break;
        }
        for (int32_t b = n_; b < 2 * n_; b++) {
            if (parent_[b] == -1 && base_[b] >= 0 && label_[b] == 1 && dual_[b] == 0) {
                expand_blossom(b, true);
            }
        }
    }

    std::vector<int32_t> result(n_, -1);
    for (int32_t v = 0; v < n_; v++) {
        if (mate_[v] >= 0) {
            result[v] = endpoint_[mate_[v]];
        }
    }
    return result;
}

}  // namespace

std::vector<int32_t> max_weight_matching(
    int32_t num_vertices, std::span<const IntegerEdge> edges, bool max_cardinality) {
    Solver solver(num_vertices, edges, max_cardinality);
    return solver.run();
}

}  // namespace fm
