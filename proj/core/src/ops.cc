/* Copyright 2026 The Interact Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "interact/ops.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "interact/errors.h"
#include "interact/summation.h"

namespace interact {
namespace {

Tape& TapeOf(const Var& v) {
  if (!v.valid()) throw ContractError("operation on an unbound Var");
  return *v.tape();
}

std::string Pair(const Shape& a, const Shape& b) {
  return ShapeToString(a) + " and " + ShapeToString(b);
}

void RequireSameShape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         Pair(a.shape(), b.shape()));
  }
}

std::size_t LastDim(const Shape& s) { return s.empty() ? 1 : s.back(); }

// Product of dims in [begin, end).
std::size_t Span(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= s[i];
  return n;
}

template <typename F>
Var Unary(Var x, F forward_and_derivative) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  Tensor deriv(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    auto [y, dy] = forward_and_derivative(xv[i]);
    out[i] = y;
    deriv[i] = dy;
  }
  return TapeOf(x).Record(
      std::move(out), {x},
      [deriv = std::move(deriv)](const Tensor& g, GradSink& sink) {
        if (Tensor* gx = sink.For(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * deriv[i];
        }
      });
}

}  // namespace

Var MatMul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " +
                         Pair(av.shape(), bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      const double a_it = av.at(i, t);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += a_it * bv.at(t, j);
    }
  }
  return TapeOf(a).Record(
      std::move(out), {a, b}, [a, b, m, k, n](const Tensor& g, GradSink& sink) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        if (Tensor* ga = sink.For(0)) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t t = 0; t < k; ++t) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += g.at(i, j) * bv.at(t, j);
              ga->at(i, t) += s;
            }
          }
        }
        if (Tensor* gb = sink.For(1)) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t t = 0; t < k; ++t) {
              const double a_it = av.at(i, t);
              for (std::size_t j = 0; j < n; ++j) gb->at(t, j) += a_it * g.at(i, j);
            }
          }
        }
      });
}

Var Transpose(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) {
    throw DimensionError("transpose: expected rank 2, got " +
                         ShapeToString(av.shape()));
  }
  const std::size_t r = av.dim(0), c = av.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
  }
  return TapeOf(a).Record(std::move(out), {a},
                          [r, c](const Tensor& g, GradSink& sink) {
                            if (Tensor* ga = sink.For(0)) {
                              for (std::size_t i = 0; i < r; ++i) {
                                for (std::size_t j = 0; j < c; ++j) {
                                  ga->at(i, j) += g.at(j, i);
                                }
                              }
                            }
                          });
}

Var Add(Var a, Var b) {
  RequireSameShape("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return TapeOf(a).Record(std::move(out), {a, b},
                          [](const Tensor& g, GradSink& sink) {
                            for (std::size_t k = 0; k < 2; ++k) {
                              if (Tensor* gk = sink.For(k)) {
                                for (std::size_t i = 0; i < g.size(); ++i) {
                                  (*gk)[i] += g[i];
                                }
                              }
                            }
                          });
}

Var Sub(Var a, Var b) {
  RequireSameShape("sub", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return TapeOf(a).Record(std::move(out), {a, b},
                          [](const Tensor& g, GradSink& sink) {
                            if (Tensor* ga = sink.For(0)) {
                              for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
                            }
                            if (Tensor* gb = sink.For(1)) {
                              for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
                            }
                          });
}

Var Mul(Var a, Var b) {
  RequireSameShape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return TapeOf(a).Record(std::move(out), {a, b},
                          [a, b](const Tensor& g, GradSink& sink) {
                            const Tensor& av = a.value();
                            const Tensor& bv = b.value();
                            if (Tensor* ga = sink.For(0)) {
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                (*ga)[i] += g[i] * bv[i];
                              }
                            }
                            if (Tensor* gb = sink.For(1)) {
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                (*gb)[i] += g[i] * av[i];
                              }
                            }
                          });
}

Var Scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return TapeOf(a).Record(std::move(out), {a},
                          [factor](const Tensor& g, GradSink& sink) {
                            if (Tensor* ga = sink.For(0)) {
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                (*ga)[i] += g[i] * factor;
                              }
                            }
                          });
}

Var AddBias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  const std::size_t c = LastDim(xv.shape());
  if (bv.rank() != 1 || bv.dim(0) != c) {
    throw DimensionError("add_bias: shape mismatch " +
                         Pair(xv.shape(), bv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % c];
  return TapeOf(x).Record(std::move(out), {x, bias},
                          [c](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                            }
                            if (Tensor* gb = sink.For(1)) {
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                (*gb)[i % c] += g[i];
                              }
                            }
                          });
}

Var Relu(Var x) {
  return Unary(x, [](double v) {
    return std::pair{v > 0.0 ? v : 0.0, v > 0.0 ? 1.0 : 0.0};
  });
}

Var Sigmoid(Var x) {
  return Unary(x, [](double v) {
    const double y = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                              : std::exp(v) / (1.0 + std::exp(v));
    return std::pair{y, y * (1.0 - y)};
  });
}

Var Softplus(Var x) {
  return Unary(x, [](double v) {
    const double y = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                              : std::exp(v) / (1.0 + std::exp(v));
    return std::pair{y, s};
  });
}

Var Abs(Var x) {
  return Unary(x, [](double v) {
    return std::pair{std::abs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0)};
  });
}

Var Sum(Var x) {
  KahanSum acc;
  for (double v : x.value().data()) acc.Add(v);
  const double s = acc.value();
  return TapeOf(x).Record(Tensor::Scalar(s), {x},
                          [](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (double& v : gx->data()) v += g[0];
                            }
                          });
}

Var SumOf(std::span<const Var> xs, std::span<const double> weights) {
  if (xs.empty()) throw ContractError("sum_of: no inputs");
  if (!weights.empty() && weights.size() != xs.size()) {
    throw DimensionError("sum_of: " + std::to_string(xs.size()) + " inputs but " +
                         std::to_string(weights.size()) + " weights");
  }
  std::vector<double> w(xs.size(), 1.0);
  std::copy(weights.begin(), weights.end(), w.begin());
  Tape& tape = TapeOf(xs[0]);
  KahanSum acc;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k].tape() != &tape) throw ContractError("sum_of: inputs on different tapes");
    for (double v : xs[k].value().data()) acc.Add(w[k] * v);
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return tape.Record(Tensor::Scalar(acc.value()), std::move(inputs),
                     [w = std::move(w)](const Tensor& g, GradSink& sink) {
                       for (std::size_t k = 0; k < w.size(); ++k) {
                         if (Tensor* gk = sink.For(k)) {
                           for (double& v : gk->data()) v += g[0] * w[k];
                         }
                       }
                     });
}

Var Reshape(Var x, Shape shape) {
  Tensor out = x.value().Reshaped(std::move(shape));
  return TapeOf(x).Record(std::move(out), {x},
                          [](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                            }
                          });
}

Var SliceLast(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  const std::size_t c = LastDim(xv.shape());
  if (xv.rank() == 0 || begin > end || end > c) {
    throw DimensionError("slice_last: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for " +
                         ShapeToString(xv.shape()));
  }
  const std::size_t rows = xv.size() / std::max<std::size_t>(c, 1);
  const std::size_t w = end - begin;
  Shape shape = xv.shape();
  shape.back() = w;
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < w; ++j) out[r * w + j] = xv[r * c + begin + j];
  }
  return TapeOf(x).Record(std::move(out), {x},
                          [rows, c, w, begin](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t r = 0; r < rows; ++r) {
                                for (std::size_t j = 0; j < w; ++j) {
                                  (*gx)[r * c + begin + j] += g[r * w + j];
                                }
                              }
                            }
                          });
}

Var ConcatLast(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_last: no operands");
  const Shape& lead = parts[0].shape();
  if (lead.empty()) throw DimensionError("concat_last: scalar operand");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != lead.size() ||
        !std::equal(s.begin(), s.end() - 1, lead.begin())) {
      throw DimensionError("concat_last: leading shapes differ " +
                           Pair(lead, s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = NumElements(lead) / std::max<std::size_t>(lead.back(), 1);
  Shape shape = lead;
  shape.back() = total;
  Tensor out(shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) out[r * total + offset + j] = pv[r * w + j];
    }
    offset += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return TapeOf(parts[0]).Record(
      std::move(out), std::move(inputs),
      [widths, rows, total](const Tensor& g, GradSink& sink) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          const std::size_t w = widths[k];
          if (Tensor* gk = sink.For(k)) {
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < w; ++j) {
                (*gk)[r * w + j] += g[r * total + offset + j];
              }
            }
          }
          offset += w;
        }
      });
}

Var Stack(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("stack: no operands");
  const Shape& inner = parts[0].shape();
  const std::size_t n = NumElements(inner);
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  Tensor out(shape);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].shape() != inner) {
      throw DimensionError("stack: shape mismatch " +
                           Pair(inner, parts[k].shape()));
    }
    const Tensor& pv = parts[k].value();
    std::copy(pv.data().begin(), pv.data().end(), out.data().begin() + k * n);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return TapeOf(parts[0]).Record(std::move(out), std::move(inputs),
                                 [n, count = parts.size()](const Tensor& g, GradSink& sink) {
                                   for (std::size_t k = 0; k < count; ++k) {
                                     if (Tensor* gk = sink.For(k)) {
                                       for (std::size_t i = 0; i < n; ++i) {
                                         (*gk)[i] += g[k * n + i];
                                       }
                                     }
                                   }
                                 });
}

Var GatherRows(Var x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0) throw DimensionError("gather_rows: scalar operand");
  const std::size_t n0 = xv.dim(0);
  const std::size_t row = n0 == 0 ? NumElements(Shape(xv.shape().begin() + 1, xv.shape().end()))
                                  : xv.size() / n0;
  Shape shape = xv.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= n0) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[k]) +
                           " out of range for " + ShapeToString(xv.shape()));
    }
    std::copy_n(xv.data().begin() + rows[k] * row, row, out.data().begin() + k * row);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return TapeOf(x).Record(std::move(out), {x},
                          [idx = std::move(idx), row](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t k = 0; k < idx.size(); ++k) {
                                for (std::size_t i = 0; i < row; ++i) {
                                  (*gx)[idx[k] * row + i] += g[k * row + i];
                                }
                              }
                            }
                          });
}

Var Expand(Var x, std::size_t axis, std::size_t count) {
  const Tensor& xv = x.value();
  if (axis > xv.rank()) {
    throw DimensionError("expand: axis " + std::to_string(axis) +
                         " invalid for " + ShapeToString(xv.shape()));
  }
  const std::size_t outer = Span(xv.shape(), 0, axis);
  const std::size_t inner = Span(xv.shape(), axis, xv.rank());
  Shape shape = xv.shape();
  shape.insert(shape.begin() + axis, count);
  Tensor out(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t i = 0; i < inner; ++i) {
        out[(o * count + c) * inner + i] = xv[o * inner + i];
      }
    }
  }
  return TapeOf(x).Record(std::move(out), {x},
                          [outer, inner, count](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t o = 0; o < outer; ++o) {
                                for (std::size_t c = 0; c < count; ++c) {
                                  for (std::size_t i = 0; i < inner; ++i) {
                                    (*gx)[o * inner + i] += g[(o * count + c) * inner + i];
                                  }
                                }
                              }
                            }
                          });
}

Var CumsumAxis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank()) {
    throw DimensionError("cumsum: axis " + std::to_string(axis) +
                         " invalid for " + ShapeToString(xv.shape()));
  }
  const std::size_t outer = Span(xv.shape(), 0, axis);
  const std::size_t n = xv.dim(axis);
  const std::size_t inner = Span(xv.shape(), axis + 1, xv.rank());
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t at = (o * n + t) * inner + i;
        acc += xv[at];
        out[at] = acc;
      }
    }
  }
  return TapeOf(x).Record(std::move(out), {x},
                          [outer, n, inner](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t o = 0; o < outer; ++o) {
                                for (std::size_t i = 0; i < inner; ++i) {
                                  double acc = 0.0;
                                  for (std::size_t t = n; t-- > 0;) {
                                    const std::size_t at = (o * n + t) * inner + i;
                                    acc += g[at];
                                    (*gx)[at] += acc;
                                  }
                                }
                              }
                            }
                          });
}

Var SoftmaxLast(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = LastDim(xv.shape());
  if (xv.rank() == 0 || n == 0) {
    throw DomainError("softmax_last: empty trailing axis in " +
                      ShapeToString(xv.shape()));
  }
  const std::size_t rows = xv.size() / n;
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data().data() + r * n;
    double* y = out.data().data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(in[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  Tensor y_copy = out;
  return TapeOf(x).Record(std::move(out), {x},
                          [y = std::move(y_copy), rows, n](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t r = 0; r < rows; ++r) {
                                double dot = 0.0;
                                for (std::size_t j = 0; j < n; ++j) {
                                  dot += g[r * n + j] * y[r * n + j];
                                }
                                for (std::size_t j = 0; j < n; ++j) {
                                  (*gx)[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
                                }
                              }
                            }
                          });
}

Var LayerNormLast(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  const std::size_t n = LastDim(xv.shape());
  if (xv.rank() == 0 || n == 0 || gamma.shape() != Shape{n} ||
      beta.shape() != Shape{n}) {
    throw DimensionError("layer_norm: shape mismatch " +
                         Pair(xv.shape(), gamma.shape()));
  }
  const std::size_t rows = xv.size() / n;
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor out(xv.shape());
  Tensor xhat(xv.shape());
  std::vector<double> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xv[r * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xv[r * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xv[r * n + j] - mean) * rstd[r];
      xhat[r * n + j] = h;
      out[r * n + j] = gv[j] * h + bv[j];
    }
  }
  return TapeOf(x).Record(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), rstd = std::move(rstd), gamma, rows, n](
          const Tensor& g, GradSink& sink) {
        const Tensor& gv = gamma.value();
        if (Tensor* gg = sink.For(1)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gg)[i % n] += g[i] * xhat[i];
        }
        if (Tensor* gb = sink.For(2)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % n] += g[i];
        }
        if (Tensor* gx = sink.For(0)) {
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t r = 0; r < rows; ++r) {
            double sum_d = 0.0, sum_dh = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g[r * n + j] * gv[j];
              sum_d += d;
              sum_dh += d * xhat[r * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g[r * n + j] * gv[j];
              (*gx)[r * n + j] +=
                  rstd[r] * (d - inv_n * sum_d - xhat[r * n + j] * inv_n * sum_dh);
            }
          }
        }
      });
}

Var MaxPoolAxis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank()) {
    throw DimensionError("maxpool: axis " + std::to_string(axis) +
                         " invalid for " + ShapeToString(xv.shape()));
  }
  const std::size_t n = xv.dim(axis);
  if (n == 0) {
    throw DomainError("maxpool: empty axis " + std::to_string(axis) + " in " +
                      ShapeToString(xv.shape()));
  }
  const std::size_t outer = Span(xv.shape(), 0, axis);
  const std::size_t inner = Span(xv.shape(), axis + 1, xv.rank());
  Shape shape = xv.shape();
  shape.erase(shape.begin() + axis);
  Tensor out(shape);
  std::vector<std::size_t> arg(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t best = 0;
      double best_v = xv[o * n * inner + i];
      for (std::size_t t = 1; t < n; ++t) {
        const double v = xv[(o * n + t) * inner + i];
        if (v > best_v) {
          best_v = v;
          best = t;
        }
      }
      out[o * inner + i] = best_v;
      arg[o * inner + i] = (o * n + best) * inner + i;
    }
  }
  return TapeOf(x).Record(std::move(out), {x},
                          [arg = std::move(arg)](const Tensor& g, GradSink& sink) {
                            if (Tensor* gx = sink.For(0)) {
                              for (std::size_t k = 0; k < arg.size(); ++k) {
                                (*gx)[arg[k]] += g[k];
                              }
                            }
                          });
}

Var Linear(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.rank() == 0 || wv.rank() != 2 || xv.shape().back() != wv.dim(0) ||
      bv.shape() != Shape{wv.dim(1)}) {
    throw DimensionError("linear: shape mismatch " + Pair(xv.shape(), wv.shape()) +
                         " (bias " + ShapeToString(bv.shape()) + ")");
  }
  const std::size_t in = wv.dim(0), out_dim = wv.dim(1);
  const std::size_t rows = in == 0 ? 0 : xv.size() / in;
  Shape shape = xv.shape();
  shape.back() = out_dim;
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    double* y = out.data().data() + r * out_dim;
    for (std::size_t j = 0; j < out_dim; ++j) y[j] = bv[j];
    for (std::size_t t = 0; t < in; ++t) {
      const double xi = xv[r * in + t];
      const double* wr = wv.data().data() + t * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) y[j] += xi * wr[j];
    }
  }
  return TapeOf(x).Record(
      std::move(out), {x, w, b},
      [x, w, rows, in, out_dim](const Tensor& g, GradSink& sink) {
        const Tensor& xv = x.value();
        const Tensor& wv = w.value();
        if (Tensor* gx = sink.For(0)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t t = 0; t < in; ++t) {
              double s = 0.0;
              for (std::size_t j = 0; j < out_dim; ++j) {
                s += g[r * out_dim + j] * wv[t * out_dim + j];
              }
              (*gx)[r * in + t] += s;
            }
          }
        }
        if (Tensor* gw = sink.For(1)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t t = 0; t < in; ++t) {
              const double xi = xv[r * in + t];
              for (std::size_t j = 0; j < out_dim; ++j) {
                (*gw)[t * out_dim + j] += xi * g[r * out_dim + j];
              }
            }
          }
        }
        if (Tensor* gb = sink.For(2)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < out_dim; ++j) (*gb)[j] += g[r * out_dim + j];
          }
        }
      });
}

Var Mlp(Var x, const MlpParams& params) {
  if (params.weights.size() != params.biases.size() || params.weights.empty()) {
    throw DimensionError("mlp: weights and biases must pair up");
  }
  Var h = x;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    h = Linear(h, params.weights[l], params.biases[l]);
    if (l + 1 < params.weights.size()) h = Relu(h);
  }
  return h;
}

Var MultiHeadAttention(Var q, Var k, Var v, std::optional<Var> k_pos,
                       const AttentionParams& p, std::size_t heads) {
  const Shape& qs = q.shape();
  const Shape& ks = k.shape();
  if (qs.size() != 2 || ks.size() != 2 || v.shape() != ks || ks[1] != qs[1]) {
    throw DimensionError("attention: incompatible q/k/v shapes " + Pair(qs, ks) +
                         " and " + ShapeToString(v.shape()));
  }
  const std::size_t channels = qs[1];
  if (heads == 0 || channels % heads != 0) {
    throw ConfigError("attention: " + std::to_string(channels) +
                      " channels not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (k_pos && k_pos->shape() != ks) {
    throw DimensionError("attention: key position shape mismatch " +
                         Pair(ks, k_pos->shape()));
  }
  const std::size_t head_dim = channels / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Var query = Linear(q, p.wq, p.bq);
  // No key bias: it shifts every logit of a query equally and cancels in
  // the softmax.
  Var key = Linear(k_pos ? Add(k, *k_pos) : k, p.wk,
                   TapeOf(k).Constant(Tensor({p.wk.shape().back()})));
  Var value = Linear(v, p.wv, p.bv);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * head_dim, hi = lo + head_dim;
    Var qh = SliceLast(query, lo, hi);
    Var kh = SliceLast(key, lo, hi);
    Var vh = SliceLast(value, lo, hi);
    Var weights = SoftmaxLast(Scale(MatMul(qh, Transpose(kh)), scale));
    outs.push_back(MatMul(weights, vh));
  }
  Var merged = heads == 1 ? outs[0] : ConcatLast(outs);
  return Linear(merged, p.wo, p.bo);
}

}  // namespace interact
