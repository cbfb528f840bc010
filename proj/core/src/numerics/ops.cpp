#include "mammoth2/numerics/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>

namespace m2::numerics {

namespace {

using EMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using CMapM = Eigen::Map<const EMat>;

CMapM emap(const Array& a) { return CMapM(a.data(), a.rows(), a.cols()); }
MapM emap(Array& a) { return MapM(a.data(), a.rows(), a.cols()); }

void check_same_shape(const Array& a, const Array& b, const char* op) {
    M2_CHECK(a.same_shape(b),
             std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

real sigmoid(real x) { return real(1) / (real(1) + std::exp(-x)); }

}  // namespace

Var add(Tape& t, Var a, Var b) {
    const Array& av = t.val(a);
    const Array& bv = t.val(b);
    check_same_shape(av, bv, "add");
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return t.push(std::move(out), [a, b](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        Array& gb = t.grad(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    });
}

Var sub(Tape& t, Var a, Var b) {
    const Array& av = t.val(a);
    const Array& bv = t.val(b);
    check_same_shape(av, bv, "sub");
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return t.push(std::move(out), [a, b](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        Array& gb = t.grad(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    });
}

Var mul(Tape& t, Var a, Var b) {
    const Array& av = t.val(a);
    const Array& bv = t.val(b);
    check_same_shape(av, bv, "mul");
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return t.push(std::move(out), [a, b](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& av = t.val(a);
        const Array& bv = t.val(b);
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        Array& gb = t.grad(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    });
}

Var div(Tape& t, Var a, Var b) {
    const Array& av = t.val(a);
    const Array& bv = t.val(b);
    check_same_shape(av, bv, "div");
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] /= bv[i];
    return t.push(std::move(out), [a, b](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& y = t.val(Var{self});
        const Array& bv = t.val(b);
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv[i];
        Array& gb = t.grad(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * y[i] / bv[i];
    });
}

Var scale(Tape& t, Var a, real c) {
    Array out = t.val(a);
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= c;
    return t.push(std::move(out), [a, c](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    });
}

Var add_const(Tape& t, Var a, real c) {
    Array out = t.val(a);
    for (int64_t i = 0; i < out.size(); ++i) out[i] += c;
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var silu(Tape& t, Var a) {
    const Array& av = t.val(a);
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] * sigmoid(av[i]);
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& av = t.val(a);
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) {
            real s = sigmoid(av[i]);
            ga[i] += g[i] * s * (real(1) + av[i] * (real(1) - s));
        }
    });
}

Var exp_op(Tape& t, Var a) {
    const Array& av = t.val(a);
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& y = t.val(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
}

Var sqrt_op(Tape& t, Var a) {
    const Array& av = t.val(a);
    Array out = av;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(av[i]);
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& y = t.val(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (real(2) * y[i]);
    });
}

Var matmul(Tape& t, Var a, Var b) {
    const Array& av = t.val(a);
    const Array& bv = t.val(b);
    M2_CHECK(av.rank() == 2 && bv.rank() == 2, "matmul: expects 2-D operands");
    M2_CHECK(av.dim(1) == bv.dim(0), "matmul: inner dimensions differ, " + av.shape_str() +
                                         " x " + bv.shape_str());
    Array out({av.dim(0), bv.dim(1)});
    emap(out).noalias() = emap(av) * emap(bv);
    return t.push(std::move(out), [a, b](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& av = t.val(a);
        const Array& bv = t.val(b);
        Array& ga = t.grad(a);
        emap(ga).noalias() += emap(g) * emap(bv).transpose();
        Array& gb = t.grad(b);
        emap(gb).noalias() += emap(av).transpose() * emap(g);
    });
}

Var transpose(Tape& t, Var a) {
    const Array& av = t.val(a);
    M2_CHECK(av.rank() == 2, "transpose: expects a 2-D operand");
    Array out({av.dim(1), av.dim(0)});
    emap(out) = emap(av).transpose();
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        emap(ga) += emap(g).transpose();
    });
}

Var softmax(Tape& t, Var a) {
    const Array& av = t.val(a);
    M2_CHECK(av.rank() <= 2, "softmax: expects a 1-D or 2-D operand");
    Array out = av;
    int64_t n = av.rows(), d = av.cols();
    for (int64_t i = 0; i < n; ++i) {
        real* row = out.data() + i * d;
        real m = row[0];
        for (int64_t j = 1; j < d; ++j) m = std::max(m, row[j]);
        real z = 0;
        for (int64_t j = 0; j < d; ++j) {
            row[j] = std::exp(row[j] - m);
            z += row[j];
        }
        for (int64_t j = 0; j < d; ++j) row[j] /= z;
    }
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& s = t.val(Var{self});
        Array& ga = t.grad(a);
        int64_t n = s.rows(), d = s.cols();
        for (int64_t i = 0; i < n; ++i) {
            const real* gr = g.data() + i * d;
            const real* sr = s.data() + i * d;
            real dot = 0;
            for (int64_t j = 0; j < d; ++j) dot += gr[j] * sr[j];
            real* gar = ga.data() + i * d;
            for (int64_t j = 0; j < d; ++j) gar[j] += sr[j] * (gr[j] - dot);
        }
    });
}

Var log_softmax(Tape& t, Var a) {
    const Array& av = t.val(a);
    M2_CHECK(av.rank() <= 2, "log_softmax: expects a 1-D or 2-D operand");
    Array out = av;
    int64_t n = av.rows(), d = av.cols();
    for (int64_t i = 0; i < n; ++i) {
        real* row = out.data() + i * d;
        real m = row[0];
        for (int64_t j = 1; j < d; ++j) m = std::max(m, row[j]);
        real z = 0;
        for (int64_t j = 0; j < d; ++j) z += std::exp(row[j] - m);
        real lz = m + std::log(z);
        for (int64_t j = 0; j < d; ++j) row[j] -= lz;
    }
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& y = t.val(Var{self});
        Array& ga = t.grad(a);
        int64_t n = y.rows(), d = y.cols();
        for (int64_t i = 0; i < n; ++i) {
            const real* gr = g.data() + i * d;
            const real* yr = y.data() + i * d;
            real gsum = 0;
            for (int64_t j = 0; j < d; ++j) gsum += gr[j];
            real* gar = ga.data() + i * d;
            for (int64_t j = 0; j < d; ++j) gar[j] += gr[j] - std::exp(yr[j]) * gsum;
        }
    });
}

Var rms_norm(Tape& t, Var x, Var gamma, real eps) {
    const Array& xv = t.val(x);
    const Array& gv = t.val(gamma);
    M2_CHECK(xv.rank() <= 2, "rms_norm: expects a 1-D or 2-D operand");
    M2_CHECK(gv.rank() == 1 && gv.dim(0) == xv.cols(),
             "rms_norm: gamma shape " + gv.shape_str() + " does not match feature dim");
    int64_t n = xv.rows(), d = xv.cols();
    Array out = xv;
    for (int64_t i = 0; i < n; ++i) {
        real* row = out.data() + i * d;
        real ms = 0;
        for (int64_t j = 0; j < d; ++j) ms += row[j] * row[j];
        real r = std::sqrt(ms / real(d) + eps);
        for (int64_t j = 0; j < d; ++j) row[j] = gv[j] * row[j] / r;
    }
    return t.push(std::move(out), [x, gamma, eps](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        const Array& xv = t.val(x);
        const Array& gv = t.val(gamma);
        Array& gx = t.grad(x);
        Array& gg = t.grad(gamma);
        int64_t n = xv.rows(), d = xv.cols();
        for (int64_t i = 0; i < n; ++i) {
            const real* xr = xv.data() + i * d;
            const real* gr = g.data() + i * d;
            real* gxr = gx.data() + i * d;
            real ms = 0;
            for (int64_t j = 0; j < d; ++j) ms += xr[j] * xr[j];
            real r = std::sqrt(ms / real(d) + eps);
            real dot = 0;  // sum_i g_i * gamma_i * x_i
            for (int64_t j = 0; j < d; ++j) dot += gr[j] * gv[j] * xr[j];
            real r3 = r * r * r;
            for (int64_t j = 0; j < d; ++j) {
                gxr[j] += gv[j] * gr[j] / r - xr[j] * dot / (real(d) * r3);
                gg[j] += gr[j] * xr[j] / r;
            }
        }
    });
}

Var sum(Tape& t, Var a) {
    const Array& av = t.val(a);
    real s = 0;
    for (int64_t i = 0; i < av.size(); ++i) s += av[i];
    return t.push(Array::scalar(s), [a](Tape& t, int32_t self) {
        real g = t.grad(Var{self})[0];
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

Var mean(Tape& t, Var a) {
    int64_t n = t.val(a).size();
    M2_CHECK(n > 0, "mean: empty operand");
    return scale(t, sum(t, a), real(1) / real(n));
}

Var sum_rows(Tape& t, Var a) {
    const Array& av = t.val(a);
    M2_CHECK(av.rank() == 2, "sum_rows: expects a 2-D operand");
    int64_t n = av.dim(0), d = av.dim(1);
    Array out({n});
    for (int64_t i = 0; i < n; ++i) {
        real s = 0;
        for (int64_t j = 0; j < d; ++j) s += av.at(i, j);
        out[i] = s;
    }
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        int64_t n = ga.dim(0), d = ga.dim(1);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < d; ++j) ga.at(i, j) += g[i];
    });
}

Var reshape(Tape& t, Var a, std::vector<int64_t> shape) {
    const Array& av = t.val(a);
    Array out(std::move(shape), std::vector<real>(av.data(), av.data() + av.size()));
    M2_CHECK(out.size() == av.size(), "reshape: element count changed");
    return t.push(std::move(out), [a](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& ga = t.grad(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var gather_rows(Tape& t, Var table, std::vector<int64_t> idx) {
    const Array& tv = t.val(table);
    M2_CHECK(tv.rank() == 2, "gather_rows: expects a 2-D table");
    int64_t n = static_cast<int64_t>(idx.size()), d = tv.dim(1);
    Array out({n, d});
    for (int64_t i = 0; i < n; ++i) {
        M2_CHECK(idx[static_cast<size_t>(i)] >= 0 && idx[static_cast<size_t>(i)] < tv.dim(0),
                 "gather_rows: index out of range");
        const real* src = tv.data() + idx[static_cast<size_t>(i)] * d;
        std::copy(src, src + d, out.data() + i * d);
    }
    return t.push(std::move(out), [table, idx = std::move(idx)](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gt = t.grad(table);
        int64_t d = gt.dim(1);
        for (size_t i = 0; i < idx.size(); ++i) {
            real* dst = gt.data() + idx[i] * d;
            const real* src = g.data() + static_cast<int64_t>(i) * d;
            for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
}

Var scatter_rows(Tape& t, int64_t n_rows, Var part, std::vector<int64_t> idx) {
    const Array& pv = t.val(part);
    M2_CHECK(pv.rank() == 2, "scatter_rows: expects a 2-D part");
    M2_CHECK(static_cast<int64_t>(idx.size()) == pv.dim(0),
             "scatter_rows: index count does not match part rows");
    int64_t d = pv.dim(1);
    Array out({n_rows, d});
    for (size_t i = 0; i < idx.size(); ++i) {
        M2_CHECK(idx[i] >= 0 && idx[i] < n_rows, "scatter_rows: index out of range");
        real* dst = out.data() + idx[i] * d;
        const real* src = pv.data() + static_cast<int64_t>(i) * d;
        for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    return t.push(std::move(out), [part, idx = std::move(idx)](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gp = t.grad(part);
        int64_t d = gp.dim(1);
        for (size_t i = 0; i < idx.size(); ++i) {
            real* dst = gp.data() + static_cast<int64_t>(i) * d;
            const real* src = g.data() + idx[i] * d;
            for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
}

Var rows_pick(Tape& t, Var x, std::vector<int64_t> idx) {
    const Array& xv = t.val(x);
    M2_CHECK(xv.rank() == 2, "rows_pick: expects a 2-D operand");
    M2_CHECK(static_cast<int64_t>(idx.size()) == xv.dim(0),
             "rows_pick: index count does not match rows");
    int64_t n = xv.dim(0);
    Array out({n});
    for (int64_t i = 0; i < n; ++i) {
        int64_t j = idx[static_cast<size_t>(i)];
        M2_CHECK(j >= 0 && j < xv.dim(1), "rows_pick: index out of range");
        out[i] = xv.at(i, j);
    }
    return t.push(std::move(out), [x, idx = std::move(idx)](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gx = t.grad(x);
        for (size_t i = 0; i < idx.size(); ++i)
            gx.at(static_cast<int64_t>(i), idx[i]) += g[static_cast<int64_t>(i)];
    });
}

Var slice_rows(Tape& t, Var x, int64_t start, int64_t n) {
    const Array& xv = t.val(x);
    M2_CHECK(xv.rank() == 2, "slice_rows: expects a 2-D operand");
    M2_CHECK(start >= 0 && n >= 0 && start + n <= xv.dim(0), "slice_rows: range out of bounds");
    int64_t d = xv.dim(1);
    Array out({n, d});
    std::copy(xv.data() + start * d, xv.data() + (start + n) * d, out.data());
    return t.push(std::move(out), [x, start](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gx = t.grad(x);
        int64_t d = gx.dim(1);
        real* dst = gx.data() + start * d;
        for (int64_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    });
}

Var slice_cols(Tape& t, Var x, int64_t start, int64_t n) {
    const Array& xv = t.val(x);
    M2_CHECK(xv.rank() == 2, "slice_cols: expects a 2-D operand");
    M2_CHECK(start >= 0 && n >= 0 && start + n <= xv.dim(1), "slice_cols: range out of bounds");
    int64_t rows = xv.dim(0), d = xv.dim(1);
    Array out({rows, n});
    for (int64_t i = 0; i < rows; ++i)
        std::copy(xv.data() + i * d + start, xv.data() + i * d + start + n, out.data() + i * n);
    return t.push(std::move(out), [x, start, n](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gx = t.grad(x);
        int64_t rows = gx.dim(0), d = gx.dim(1);
        for (int64_t i = 0; i < rows; ++i)
            for (int64_t j = 0; j < n; ++j) gx.at(i, start + j) += g.at(i, j);
    });
}

Var concat_rows(Tape& t, const std::vector<Var>& parts) {
    M2_CHECK(!parts.empty(), "concat_rows: no parts");
    int64_t d = t.val(parts[0]).cols(), n = 0;
    for (Var p : parts) {
        const Array& pv = t.val(p);
        M2_CHECK(pv.rank() == 2, "concat_rows: expects 2-D parts");
        M2_CHECK(pv.dim(1) == d, "concat_rows: column counts differ");
        n += pv.dim(0);
    }
    Array out({n, d});
    int64_t off = 0;
    for (Var p : parts) {
        const Array& pv = t.val(p);
        std::copy(pv.data(), pv.data() + pv.size(), out.data() + off * d);
        off += pv.dim(0);
    }
    return t.push(std::move(out), [parts](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        int64_t d = g.dim(1), off = 0;
        for (Var p : parts) {
            Array& gp = t.grad(p);
            const real* src = g.data() + off * d;
            for (int64_t i = 0; i < gp.size(); ++i) gp[i] += src[i];
            off += gp.dim(0);
        }
    });
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
    M2_CHECK(!parts.empty(), "concat_cols: no parts");
    int64_t rows = t.val(parts[0]).rows(), d = 0;
    for (Var p : parts) {
        const Array& pv = t.val(p);
        M2_CHECK(pv.rank() == 2, "concat_cols: expects 2-D parts");
        M2_CHECK(pv.dim(0) == rows, "concat_cols: row counts differ");
        d += pv.dim(1);
    }
    Array out({rows, d});
    int64_t off = 0;
    for (Var p : parts) {
        const Array& pv = t.val(p);
        int64_t pd = pv.dim(1);
        for (int64_t i = 0; i < rows; ++i)
            std::copy(pv.data() + i * pd, pv.data() + (i + 1) * pd, out.data() + i * d + off);
        off += pd;
    }
    return t.push(std::move(out), [parts](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        int64_t rows = g.dim(0), d = g.dim(1), off = 0;
        for (Var p : parts) {
            Array& gp = t.grad(p);
            int64_t pd = gp.dim(1);
            for (int64_t i = 0; i < rows; ++i)
                for (int64_t j = 0; j < pd; ++j) gp.at(i, j) += g.at(i, off + j);
            off += pd;
        }
    });
}

Var add_rowvec(Tape& t, Var x, Var b) {
    const Array& xv = t.val(x);
    const Array& bv = t.val(b);
    M2_CHECK(xv.rank() == 2 && bv.rank() == 1 && bv.dim(0) == xv.dim(1),
             "add_rowvec: shapes " + xv.shape_str() + " + " + bv.shape_str());
    Array out = xv;
    int64_t n = xv.dim(0), d = xv.dim(1);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) out.at(i, j) += bv[j];
    return t.push(std::move(out), [x, b](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gx = t.grad(x);
        for (int64_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        Array& gb = t.grad(b);
        int64_t n = g.dim(0), d = g.dim(1);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < d; ++j) gb[j] += g.at(i, j);
    });
}

Var tile_rows(Tape& t, Var row, int64_t n) {
    const Array& rv = t.val(row);
    M2_CHECK(rv.rank() == 1, "tile_rows: expects a 1-D row");
    int64_t d = rv.dim(0);
    Array out({n, d});
    for (int64_t i = 0; i < n; ++i) std::copy(rv.data(), rv.data() + d, out.data() + i * d);
    return t.push(std::move(out), [row](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gr = t.grad(row);
        int64_t n = g.dim(0), d = g.dim(1);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < d; ++j) gr[j] += g.at(i, j);
    });
}

Var mean_vars(Tape& t, const std::vector<Var>& vs) {
    M2_CHECK(!vs.empty(), "mean_vars: no operands");
    Var acc = vs[0];
    for (size_t i = 1; i < vs.size(); ++i) acc = add(t, acc, vs[i]);
    return scale(t, acc, real(1) / real(vs.size()));
}

Var stop_grad(Tape& t, Var a) { return t.constant(Array(t.val(a))); }

Var rope_rotate(Tape& t, Var x, const Array& cos_t, const Array& sin_t) {
    const Array& xv = t.val(x);
    M2_CHECK(xv.rank() == 2 && xv.dim(1) % 2 == 0, "rope_rotate: expects 2-D with even columns");
    int64_t n = xv.dim(0), half = xv.dim(1) / 2;
    M2_CHECK(cos_t.rank() == 2 && cos_t.dim(0) == n && cos_t.dim(1) == half &&
                 sin_t.same_shape(cos_t),
             "rope_rotate: table shape does not match input");
    Array out = xv;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < half; ++j) {
            real c = cos_t.at(i, j), s = sin_t.at(i, j);
            real x0 = xv.at(i, 2 * j), x1 = xv.at(i, 2 * j + 1);
            out.at(i, 2 * j) = c * x0 - s * x1;
            out.at(i, 2 * j + 1) = s * x0 + c * x1;
        }
    }
    return t.push(std::move(out), [x, cos_t, sin_t](Tape& t, int32_t self) {
        const Array& g = t.grad(Var{self});
        Array& gx = t.grad(x);
        int64_t n = g.dim(0), half = g.dim(1) / 2;
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < half; ++j) {
                real c = cos_t.at(i, j), s = sin_t.at(i, j);
                real g0 = g.at(i, 2 * j), g1 = g.at(i, 2 * j + 1);
                gx.at(i, 2 * j) += c * g0 + s * g1;
                gx.at(i, 2 * j + 1) += -s * g0 + c * g1;
            }
        }
    });
}

Var linear(Tape& t, Var x, Var w, Var b) { return add_rowvec(t, matmul(t, x, w), b); }

Var attention(Tape& t, Var q, Var k, Var v, const Array* add_mask) {
    const Array& qv = t.val(q);
    const Array& kv = t.val(k);
    M2_CHECK(qv.rank() == 2 && kv.rank() == 2 && qv.dim(1) == kv.dim(1),
             "attention: q/k feature dims differ");
    Var scores = scale(t, matmul(t, q, transpose(t, k)), real(1) / std::sqrt(real(qv.dim(1))));
    if (add_mask != nullptr) {
        M2_CHECK(add_mask->same_shape(t.val(scores)), "attention: mask shape mismatch");
        scores = add(t, scores, t.constant(*add_mask));
    }
    return matmul(t, softmax(t, scores), v);
}

Var mse_sum(Tape& t, Var a, const Array& target) {
    Var d = sub(t, a, t.constant(target));
    return sum(t, mul(t, d, d));
}

Var cosine_rows(Tape& t, Var a, Var b, real eps) {
    Var dot = sum_rows(t, mul(t, a, b));
    Var na = sqrt_op(t, add_const(t, sum_rows(t, mul(t, a, a)), eps));
    Var nb = sqrt_op(t, add_const(t, sum_rows(t, mul(t, b, b)), eps));
    return div(t, dot, mul(t, na, nb));
}

Var cross_entropy_masked(Tape& t, Var logits, const std::vector<int64_t>& targets,
                         const std::vector<uint8_t>& mask) {
    const Array& lv = t.val(logits);
    M2_CHECK(lv.rank() == 2, "cross_entropy: expects 2-D logits");
    M2_CHECK(static_cast<int64_t>(targets.size()) == lv.dim(0) && targets.size() == mask.size(),
             "cross_entropy: target/mask count does not match logit rows");
    int64_t count = 0;
    for (uint8_t m : mask) count += m ? 1 : 0;
    M2_CHECK(count > 0, "cross_entropy: empty supervision mask");
    Array w({lv.dim(0)});
    for (int64_t i = 0; i < lv.dim(0); ++i)
        w[i] = mask[static_cast<size_t>(i)] ? real(-1) / real(count) : real(0);
    Var picked = rows_pick(t, log_softmax(t, logits), targets);
    return sum(t, mul(t, picked, t.constant(std::move(w))));
}

Array causal_mask(int64_t n) {
    Array m({n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j) m.at(i, j) = real(-1e30);
    return m;
}

std::pair<Array, Array> rope_tables_1d(const std::vector<int64_t>& positions, int64_t d_head,
                                       double base) {
    M2_CHECK(d_head > 0 && d_head % 2 == 0, "rope tables: head dim must be even");
    int64_t n = static_cast<int64_t>(positions.size()), half = d_head / 2;
    Array c({n, half}), s({n, half});
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < half; ++j) {
            double freq = std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(d_head));
            double ang = static_cast<double>(positions[static_cast<size_t>(i)]) * freq;
            c.at(i, j) = static_cast<real>(std::cos(ang));
            s.at(i, j) = static_cast<real>(std::sin(ang));
        }
    }
    return {std::move(c), std::move(s)};
}

}  // namespace m2::numerics
