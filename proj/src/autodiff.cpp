#include "ppdesign/autodiff.hpp"

#include <cmath>

namespace ppdesign::ad {

Var Tape::push(Mat value, std::function<void(Tape&)> back) {
    Node n;
    n.grad = Mat::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
}

Var Tape::leaf(Mat value) { return push(std::move(value), nullptr); }

void Tape::accumulate_grad(Var v, const Mat& g) {
    Node& n = node(v);
    if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
        throw ContractError("autodiff: gradient shape mismatch");
    }
    n.grad += g;
}

void Tape::backward() {
    for (int i = size() - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.back) n.back(*this);
    }
}

Var Tape::matmul(Var a, Var b) {
    Mat out = value(a) * value(b);
    Var r{size()};
    return push(std::move(out), [a, b, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad.noalias() += g * t.node(b).value.transpose();
        t.node(b).grad.noalias() += t.node(a).value.transpose() * g;
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    Mat out = value(a) * value(b).transpose();
    Var r{size()};
    return push(std::move(out), [a, b, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad.noalias() += g * t.node(b).value;
        t.node(b).grad.noalias() += g.transpose() * t.node(a).value;
    });
}

Var Tape::add(Var a, Var b) {
    Mat out = value(a) + value(b);
    Var r{size()};
    return push(std::move(out), [a, b, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad += g;
        t.node(b).grad += g;
    });
}

Var Tape::sub(Var a, Var b) {
    Mat out = value(a) - value(b);
    Var r{size()};
    return push(std::move(out), [a, b, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad += g;
        t.node(b).grad -= g;
    });
}

Var Tape::hadamard(Var a, Var b) {
    Mat out = value(a).cwiseProduct(value(b));
    Var r{size()};
    return push(std::move(out), [a, b, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad += g.cwiseProduct(t.node(b).value);
        t.node(b).grad += g.cwiseProduct(t.node(a).value);
    });
}

Var Tape::scale(Var a, double c) {
    Mat out = value(a) * c;
    Var r{size()};
    return push(std::move(out), [a, c, r](Tape& t) { t.node(a).grad += t.node(r).grad * c; });
}

Var Tape::add_row_broadcast(Var a, Var row) {
    if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
        throw ContractError("add_row_broadcast: row must be 1 x cols(a)");
    }
    Mat out = value(a).rowwise() + value(row).row(0);
    Var r{size()};
    return push(std::move(out), [a, row, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad += g;
        t.node(row).grad += g.colwise().sum();
    });
}

Var Tape::mul_row_broadcast(Var a, Var row) {
    if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
        throw ContractError("mul_row_broadcast: row must be 1 x cols(a)");
    }
    Mat out = value(a).array().rowwise() * value(row).row(0).array();
    Var r{size()};
    return push(std::move(out), [a, row, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad.array() += g.array().rowwise() * t.node(row).value.row(0).array();
        t.node(row).grad += (g.cwiseProduct(t.node(a).value)).colwise().sum();
    });
}

Var Tape::mul_col_broadcast(Var a, Var col) {
    if (value(col).cols() != 1 || value(col).rows() != value(a).rows()) {
        throw ContractError("mul_col_broadcast: col must be rows(a) x 1");
    }
    Mat out = value(a).array().colwise() * value(col).col(0).array();
    Var r{size()};
    return push(std::move(out), [a, col, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad.array() += g.array().colwise() * t.node(col).value.col(0).array();
        t.node(col).grad += (g.cwiseProduct(t.node(a).value)).rowwise().sum();
    });
}

Var Tape::sigmoid(Var a) {
    Mat out = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Var r{size()};
    return push(std::move(out), [a, r](Tape& t) {
        const Mat& y = t.node(r).value;
        t.node(a).grad += t.node(r).grad.cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
    });
}

Var Tape::silu(Var a) {
    const Mat& x = value(a);
    Mat sig = x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    Mat out = x.cwiseProduct(sig);
    Var r{size()};
    return push(std::move(out), [a, sig = std::move(sig), r](Tape& t) {
        const Mat& x = t.node(a).value;
        // d(x*s)/dx = s + x*s*(1-s)
        Mat d = sig + x.cwiseProduct(sig.cwiseProduct(Mat::Ones(x.rows(), x.cols()) - sig));
        t.node(a).grad += t.node(r).grad.cwiseProduct(d);
    });
}

Var Tape::softmax_rows(Var a) {
    const Mat& x = value(a);
    Mat out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double m = x.row(i).maxCoeff();
        Eigen::RowVectorXd e = (x.row(i).array() - m).exp();
        out.row(i) = e / e.sum();
    }
    Var r{size()};
    return push(std::move(out), [a, r](Tape& t) {
        const Mat& y = t.node(r).value;
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = g.row(i).dot(y.row(i));
            ga.row(i) += y.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
        }
    });
}

Var Tape::masked_softmax_rows(Var a, const Eigen::MatrixXd& keep) {
    const Mat& x = value(a);
    if (keep.rows() != x.rows() || keep.cols() != x.cols()) {
        throw ContractError("masked_softmax_rows: mask shape mismatch");
    }
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (keep(i, j) != 0.0 && x(i, j) > m) m = x(i, j);
        }
        if (!std::isfinite(m)) throw ContractError("masked_softmax_rows: fully masked row");
        double sum = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (keep(i, j) != 0.0) {
                out(i, j) = std::exp(x(i, j) - m);
                sum += out(i, j);
            }
        }
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (keep(i, j) != 0.0) out(i, j) /= sum;
        }
    }
    Var r{size()};
    return push(std::move(out), [a, r](Tape& t) {
        // Masked outputs are exactly zero, so the plain softmax backward is
        // already correct: zero rows contribute nothing.
        const Mat& y = t.node(r).value;
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = g.row(i).dot(y.row(i));
            ga.row(i) += y.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
        }
    });
}

Var Tape::softmax_col_groups(Var a, int group) {
    const Mat& x = value(a);
    if (x.cols() != 1 || group <= 0 || x.rows() % group != 0) {
        throw ContractError("softmax_col_groups: need column vector with rows % group == 0");
    }
    Mat out(x.rows(), 1);
    for (Eigen::Index g0 = 0; g0 < x.rows(); g0 += group) {
        double m = x.block(g0, 0, group, 1).maxCoeff();
        double sum = 0.0;
        for (int j = 0; j < group; ++j) {
            out(g0 + j, 0) = std::exp(x(g0 + j, 0) - m);
            sum += out(g0 + j, 0);
        }
        for (int j = 0; j < group; ++j) out(g0 + j, 0) /= sum;
    }
    Var r{size()};
    return push(std::move(out), [a, group, r](Tape& t) {
        const Mat& y = t.node(r).value;
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (Eigen::Index g0 = 0; g0 < y.rows(); g0 += group) {
            double dot = 0.0;
            for (int j = 0; j < group; ++j) dot += g(g0 + j, 0) * y(g0 + j, 0);
            for (int j = 0; j < group; ++j) {
                ga(g0 + j, 0) += y(g0 + j, 0) * (g(g0 + j, 0) - dot);
            }
        }
    });
}

Var Tape::layer_norm_rows(Var a, Var gain, Var bias) {
    constexpr double kEps = 1e-5;
    const Mat& x = value(a);
    const Eigen::Index d = x.cols();
    if (value(gain).rows() != 1 || value(gain).cols() != d || value(bias).rows() != 1 ||
        value(bias).cols() != d) {
        throw ContractError("layer_norm_rows: gain/bias must be 1 x cols(a)");
    }
    Mat xhat(x.rows(), d);
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double mu = x.row(i).mean();
        double var = (x.row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + kEps);
        xhat.row(i) = (x.row(i).array() - mu) * inv_std(i);
    }
    Mat out = (xhat.array().rowwise() * value(gain).row(0).array()).rowwise() +
              value(bias).row(0).array();
    Var r{size()};
    return push(std::move(out),
                [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), r](Tape& t) {
                    const Mat& g = t.node(r).grad;
                    const Eigen::RowVectorXd gm = t.node(gain).value.row(0);
                    t.node(bias).grad += g.colwise().sum();
                    t.node(gain).grad += g.cwiseProduct(xhat).colwise().sum();
                    Mat& ga = t.node(a).grad;
                    const Eigen::Index d = g.cols();
                    for (Eigen::Index i = 0; i < g.rows(); ++i) {
                        Eigen::RowVectorXd gh = g.row(i).cwiseProduct(gm);
                        double mean_gh = gh.mean();
                        double mean_gh_xhat = gh.cwiseProduct(xhat.row(i)).mean();
                        for (Eigen::Index j = 0; j < d; ++j) {
                            ga(i, j) += inv_std(i) * (gh(j) - mean_gh - xhat(i, j) * mean_gh_xhat);
                        }
                    }
                });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: empty");
    Eigen::Index rows = value(parts[0]).rows();
    Eigen::Index cols = 0;
    for (Var p : parts) {
        if (value(p).rows() != rows) throw ContractError("concat_cols: row mismatch");
        cols += value(p).cols();
    }
    Mat out(rows, cols);
    Eigen::Index c = 0;
    for (Var p : parts) {
        out.block(0, c, rows, value(p).cols()) = value(p);
        c += value(p).cols();
    }
    Var r{size()};
    return push(std::move(out), [parts, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        Eigen::Index c = 0;
        for (Var p : parts) {
            Eigen::Index w = t.node(p).value.cols();
            t.node(p).grad += g.block(0, c, g.rows(), w);
            c += w;
        }
    });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: empty");
    Eigen::Index cols = value(parts[0]).cols();
    Eigen::Index rows = 0;
    for (Var p : parts) {
        if (value(p).cols() != cols) throw ContractError("concat_rows: col mismatch");
        rows += value(p).rows();
    }
    Mat out(rows, cols);
    Eigen::Index rr = 0;
    for (Var p : parts) {
        out.block(rr, 0, value(p).rows(), cols) = value(p);
        rr += value(p).rows();
    }
    Var r{size()};
    return push(std::move(out), [parts, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        Eigen::Index rr = 0;
        for (Var p : parts) {
            Eigen::Index h = t.node(p).value.rows();
            t.node(p).grad += g.block(rr, 0, h, g.cols());
            rr += h;
        }
    });
}

Var Tape::slice_cols(Var a, int c0, int width) {
    Mat out = value(a).block(0, c0, value(a).rows(), width);
    Var r{size()};
    return push(std::move(out), [a, c0, width, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad.block(0, c0, g.rows(), width) += g;
    });
}

Var Tape::slice_rows(Var a, int r0, int height) {
    Mat out = value(a).block(r0, 0, height, value(a).cols());
    Var r{size()};
    return push(std::move(out), [a, r0, height, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        t.node(a).grad.block(r0, 0, height, g.cols()) += g;
    });
}

Var Tape::gather_rows(Var a, std::vector<int> index) {
    const Mat& x = value(a);
    Mat out(static_cast<Eigen::Index>(index.size()), x.cols());
    for (size_t i = 0; i < index.size(); ++i) {
        if (index[i] < 0 || index[i] >= x.rows()) throw ContractError("gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = x.row(index[i]);
    }
    Var r{size()};
    return push(std::move(out), [a, index = std::move(index), r](Tape& t) {
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (size_t i = 0; i < index.size(); ++i) {
            ga.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
        }
    });
}

Var Tape::group_sum_rows(Var a, int group) {
    const Mat& x = value(a);
    if (group <= 0 || x.rows() % group != 0) {
        throw ContractError("group_sum_rows: rows % group != 0");
    }
    Mat out(x.rows() / group, x.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        out.row(i) = x.block(i * group, 0, group, x.cols()).colwise().sum();
    }
    Var r{size()};
    return push(std::move(out), [a, group, r](Tape& t) {
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            ga.block(i * group, 0, group, g.cols()).rowwise() += g.row(i);
        }
    });
}

Var Tape::row_norm(Var a, double eps) {
    const Mat& x = value(a);
    Mat out(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, 0) = x.row(i).norm() + eps;
    Var r{size()};
    return push(std::move(out), [a, eps, r](Tape& t) {
        const Mat& x = t.node(a).value;
        const Mat& y = t.node(r).value;
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double n = y(i, 0) - eps;
            if (n > 0.0) ga.row(i) += (g(i, 0) / n) * x.row(i);
        }
    });
}

Var Tape::clip_row_norm(Var a, double max_norm) {
    const Mat& x = value(a);
    Mat out = x;
    std::vector<char> clipped(static_cast<size_t>(x.rows()), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double n = x.row(i).norm();
        if (n > max_norm) {
            out.row(i) *= max_norm / n;
            clipped[static_cast<size_t>(i)] = 1;
        }
    }
    Var r{size()};
    return push(std::move(out), [a, max_norm, clipped = std::move(clipped), r](Tape& t) {
        const Mat& x = t.node(a).value;
        const Mat& g = t.node(r).grad;
        Mat& ga = t.node(a).grad;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (!clipped[static_cast<size_t>(i)]) {
                ga.row(i) += g.row(i);
            } else {
                double n = x.row(i).norm();
                double s = max_norm / n;
                double dot = g.row(i).dot(x.row(i));
                ga.row(i) += s * (g.row(i) - (dot / (n * n)) * x.row(i));
            }
        }
    });
}

}  // namespace ppdesign::ad
