#include "texflow/loss.hpp"

#include <algorithm>
#include <cmath>

#include "texflow/parallel.hpp"

namespace texflow {

double cosine_distance(const double* a, const double* b, int dim) {
    double dot = 0, na = 0, nb = 0;
    for (int k = 0; k < dim; ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-12 || nb < 1e-12) return 1.0;
    return 1.0 - dot / (na * nb);
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw LossError("cosine distance: length mismatch");
    return cosine_distance(a.data(), b.data(), static_cast<int>(a.size()));
}

std::vector<double> flatten_means(const std::vector<std::vector<double>>& layer_means) {
    std::vector<double> mu;
    for (const auto& m : layer_means) mu.insert(mu.end(), m.begin(), m.end());
    return mu;
}

namespace {

// Nearest vector of a flat set by cosine distance; ties keep the lowest
// index. set_norms, when given, carries precomputed vector norms.
size_t nn_search(const double* q, const double* set, size_t count, int dim,
                 const double* set_norms, double& best_dist) {
    double nq = 0;
    for (int k = 0; k < dim; ++k) nq += q[k] * q[k];
    nq = std::sqrt(nq);

    size_t best = 0;
    best_dist = 2.0 + 1.0; // above the cosine-distance range
    for (size_t j = 0; j < count; ++j) {
        const double* s = &set[j * dim];
        double d;
        if (nq < 1e-12) {
            d = 1.0;
        } else {
            double ns;
            double dot = 0;
            if (set_norms) {
                ns = set_norms[j];
                for (int k = 0; k < dim; ++k) dot += q[k] * s[k];
            } else {
                ns = 0;
                for (int k = 0; k < dim; ++k) {
                    dot += q[k] * s[k];
                    ns += s[k] * s[k];
                }
                ns = std::sqrt(ns);
            }
            d = ns < 1e-12 ? 1.0 : 1.0 - dot / (nq * ns);
        }
        if (d < best_dist) {
            best_dist = d;
            best = j;
        }
    }
    return best;
}

// d/dq of cosine_distance(q, s) with s fixed; zero at degenerate norms.
void cosine_distance_grad(const double* q, const double* s, int dim, double* g) {
    double dot = 0, nq2 = 0, ns2 = 0;
    for (int k = 0; k < dim; ++k) {
        dot += q[k] * s[k];
        nq2 += q[k] * q[k];
        ns2 += s[k] * s[k];
    }
    double nq = std::sqrt(nq2), ns = std::sqrt(ns2);
    if (nq < 1e-12 || ns < 1e-12) {
        std::fill(g, g + dim, 0.0);
        return;
    }
    double inv = 1.0 / (nq * ns);
    double proj = dot / (nq2 * nq * ns);
    for (int k = 0; k < dim; ++k) g[k] = -s[k] * inv + q[k] * proj;
}

} // namespace

double nnfm_basic(const std::vector<double>& fr, const std::vector<double>& fs, int dim) {
    if (dim <= 0) throw LossError("feature dimension must be positive");
    if (fr.size() % dim != 0 || fs.size() % dim != 0)
        throw LossError("feature list size is not a multiple of the dimension");
    if (fs.empty()) throw LossError("style feature set is empty");
    size_t nr = fr.size() / dim, ns = fs.size() / dim;
    if (nr == 0) return 0.0;
    double sum = 0;
    for (size_t i = 0; i < nr; ++i) {
        double d;
        nn_search(&fr[i * dim], fs.data(), ns, dim, nullptr, d);
        sum += d;
    }
    return sum / static_cast<double>(nr);
}

DirectionalResult nnfm_directional(const HypercolumnMap& fr,
                                   const AngleSetImage& r_alpha,
                                   const std::vector<const RotatedStyleDictionary*>& dicts,
                                   const std::vector<int32_t>* region_of_cell) {
    if (dicts.empty()) throw LossError("no style dictionary given");
    if (r_alpha.width() != fr.width || r_alpha.height() != fr.height)
        throw LossError("orientation grid does not match the hypercolumn grid");
    const int dim = fr.dim;
    const int B = r_alpha.bins();
    for (const RotatedStyleDictionary* d : dicts) {
        if (d->dim() != dim) throw LossError("dictionary hypercolumn length mismatch");
        if (d->bins() != B) throw LossError("dictionary angle tolerance mismatch");
    }
    if (region_of_cell && region_of_cell->size() != fr.cells())
        throw LossError("region map does not match the hypercolumn grid");

    const size_t ncells = fr.cells();
    DirectionalResult res;
    res.grad.assign(fr.data.size(), 0.0);
    res.matched_bin.assign(ncells, -1);
    res.matched_index.assign(ncells, -1);
    res.matched_region.assign(ncells, -1);

    // included = carries an orientation; these cells define the mean
    std::vector<uint8_t> included(ncells, 0);
    std::vector<int32_t> cell_region(ncells, 0);
    size_t n_inc = 0;
    for (int cy = 0; cy < fr.height; ++cy) {
        for (int cx = 0; cx < fr.width; ++cx) {
            size_t ci = static_cast<size_t>(cy) * fr.width + cx;
            if (r_alpha.bin(cx, cy) == AngleSetImage::kExcluded) continue;
            int32_t reg = region_of_cell ? (*region_of_cell)[ci] : 0;
            if (reg < 0 || reg >= static_cast<int32_t>(dicts.size()))
                throw LossError("style region id has no dictionary");
            if (!dicts[reg]->usable())
                throw LossError("style dictionary is entirely empty");
            included[ci] = 1;
            cell_region[ci] = reg;
            ++n_inc;
        }
    }
    res.included = n_inc;
    if (n_inc == 0) return res;

    std::vector<double> mu = flatten_means(fr.means_over(&included));

    // per dictionary: non-empty bins and per-bin vector norms
    struct DictAux {
        std::vector<int> nonempty;
        std::vector<std::vector<double>> norms;
    };
    std::vector<DictAux> aux(dicts.size());
    for (size_t di = 0; di < dicts.size(); ++di) {
        const RotatedStyleDictionary& d = *dicts[di];
        aux[di].norms.resize(B);
        for (int b = 0; b < B; ++b) {
            size_t n = d.bin_size(b);
            if (n > 0) aux[di].nonempty.push_back(b);
            auto& norms = aux[di].norms[b];
            norms.resize(n);
            for (size_t j = 0; j < n; ++j) {
                const double* v = d.bin_feature(b, j);
                double s = 0;
                for (int k = 0; k < dim; ++k) s += v[k] * v[k];
                norms[j] = std::sqrt(s);
            }
        }
    }

    std::vector<double> dist(ncells, 0.0);
    std::vector<uint8_t> rerouted(ncells, 0);

    parallel_for(0, fr.height, [&](int cy) {
        std::vector<double> q(dim);
        for (int cx = 0; cx < fr.width; ++cx) {
            size_t ci = static_cast<size_t>(cy) * fr.width + cx;
            if (!included[ci]) continue;
            const double* h = fr.cell(cx, cy);
            for (int k = 0; k < dim; ++k) q[k] = h[k] - mu[k];

            const RotatedStyleDictionary& d = *dicts[cell_region[ci]];
            const DictAux& a = aux[cell_region[ci]];
            int alpha = r_alpha.bin(cx, cy);
            int bin = alpha;
            if (d.bin_size(bin) == 0) {
                // circularly nearest non-empty bin, ties to the lower index
                int best_b = -1, best_c = B;
                for (int b : a.nonempty) {
                    int lin = std::abs(b - alpha);
                    int circ = std::min(lin, B - lin);
                    if (circ < best_c) {
                        best_c = circ;
                        best_b = b;
                    }
                }
                bin = best_b;
                rerouted[ci] = 1;
            }

            double dmin;
            size_t j = nn_search(q.data(), d.bin_data(bin).data(), d.bin_size(bin),
                                 dim, a.norms[bin].data(), dmin);
            dist[ci] = dmin;
            res.matched_bin[ci] = bin;
            res.matched_index[ci] = static_cast<int64_t>(j);
            res.matched_region[ci] = d.region_id;
            cosine_distance_grad(q.data(), d.bin_feature(bin, j), dim, &res.grad[ci * dim]);
        }
    });

    double sum = 0;
    for (size_t ci = 0; ci < ncells; ++ci) {
        if (!included[ci]) continue;
        sum += dist[ci];
        res.empty_bin_events += rerouted[ci];
    }
    const double N = static_cast<double>(n_inc);
    res.loss = sum / N;

    // mean-centering ties every included cell to every other one
    std::vector<double> gsum(dim, 0.0);
    for (size_t ci = 0; ci < ncells; ++ci) {
        if (!included[ci]) continue;
        const double* g = &res.grad[ci * dim];
        for (int k = 0; k < dim; ++k) gsum[k] += g[k];
    }
    for (int k = 0; k < dim; ++k) gsum[k] /= N;
    for (size_t ci = 0; ci < ncells; ++ci) {
        if (!included[ci]) continue;
        double* g = &res.grad[ci * dim];
        for (int k = 0; k < dim; ++k) g[k] = (g[k] - gsum[k]) / N;
    }
    return res;
}

double nnfm_hypercolumn(const HypercolumnMap& fr, const std::vector<double>& fs,
                        const std::vector<std::vector<double>>& mu_s) {
    const int dim = fr.dim;
    if (dim <= 0) throw LossError("empty hypercolumn grid");
    if (fs.size() % dim != 0)
        throw LossError("style feature list size is not a multiple of the dimension");
    if (fs.empty()) throw LossError("style feature set is empty");
    std::vector<double> mu = flatten_means(mu_s);
    if (mu.size() != static_cast<size_t>(dim))
        throw LossError("style means do not match the hypercolumn length");

    RotatedStyleDictionary dict(180.0, dim);
    dict.layer_means = mu_s;
    std::vector<double> centered(dim);
    size_t count = fs.size() / dim;
    for (size_t j = 0; j < count; ++j) {
        for (int k = 0; k < dim; ++k) centered[k] = fs[j * dim + k] - mu[k];
        dict.append(0, centered.data());
    }

    AngleSetImage all(fr.width, fr.height, 180.0);
    for (int y = 0; y < fr.height; ++y)
        for (int x = 0; x < fr.width; ++x) all.set_bin(x, y, 0);

    return nnfm_directional(fr, all, {&dict}, nullptr).loss;
}

TvResult tv_loss(const ImageGrid& image, const MaskGrid& foreground) {
    if (foreground.width != image.width() || foreground.height != image.height())
        throw LossError("foreground mask does not match the image");
    int w = image.width(), h = image.height(), ch = image.channels();

    TvResult res;
    res.grad = ImageGrid(w, h, ch, 0.0);
    size_t pairs = 0;
    double sum = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!foreground.at(x, y)) continue;
            const double* a = image.pixel(x, y);
            if (x + 1 < w && foreground.at(x + 1, y)) {
                ++pairs;
                const double* b = image.pixel(x + 1, y);
                for (int c = 0; c < ch; ++c) {
                    double d = a[c] - b[c];
                    sum += d * d;
                    res.grad.at(x, y, c) += 2 * d;
                    res.grad.at(x + 1, y, c) -= 2 * d;
                }
            }
            if (y + 1 < h && foreground.at(x, y + 1)) {
                ++pairs;
                const double* b = image.pixel(x, y + 1);
                for (int c = 0; c < ch; ++c) {
                    double d = a[c] - b[c];
                    sum += d * d;
                    res.grad.at(x, y, c) += 2 * d;
                    res.grad.at(x, y + 1, c) -= 2 * d;
                }
            }
        }
    }
    if (pairs == 0) {
        res.value = 0;
        res.grad.fill(0.0);
        return res;
    }
    double denom = static_cast<double>(pairs) * ch;
    res.value = sum / denom;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) res.grad.at(x, y, c) /= denom;
    return res;
}

} // namespace texflow
