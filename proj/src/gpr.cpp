#include "shapr/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"

namespace shapr::gpr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Factorized {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
};

std::optional<Factorized> factorize(const Eigen::MatrixXd& K) {
    Factorized f;
    f.llt.compute(K);
    if (f.llt.info() != Eigen::Success) return std::nullopt;
    const auto& L = f.llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double d = L(i, i);
        if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
        f.log_det += 2.0 * std::log(d);
    }
    return f;
}

// one refinement step with a wide residual; K is often badly conditioned
Eigen::MatrixXd refined_solve(const Factorized& f, const Eigen::MatrixXd& K, const Eigen::MatrixXd& Y) {
    using Wide = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::MatrixXd a = f.llt.solve(Y);
    const Wide r = Y.cast<long double>() - K.cast<long double>() * a.cast<long double>();
    a += f.llt.solve(r.cast<double>());
    return a;
}

double lml_from(const Factorized& f, const Eigen::MatrixXd& Y, const Eigen::MatrixXd* K = nullptr) {
    const auto n = static_cast<double>(Y.rows());
    const Eigen::MatrixXd a = K ? refined_solve(f, *K, Y) : f.llt.solve(Y);
    double quad = 0.0;
    for (Eigen::Index c = 0; c < Y.cols(); ++c) quad += Y.col(c).dot(a.col(c));
    const auto m = static_cast<double>(Y.cols());
    return -0.5 * quad - 0.5 * m * f.log_det - 0.5 * m * n * kLog2Pi;
}

Eigen::RowVectorXd column_means(const Eigen::MatrixXd& Y) {
    return Y.colwise().mean();
}

void check_finite(const Eigen::MatrixXd& M, const char* what) {
    if (!M.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

void write_row(std::ostringstream& out, const double* v, Eigen::Index n) {
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j) out << ' ';
        out << io::format_sig(v[j], 17);
    }
    out << '\n';
}

}  // namespace

void Hyperparams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive and finite");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw ConfigError("length scale must be positive and finite");
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw ConfigError("jitter must be finite and >= 0");
}

double kernel(std::span<const double> a, std::span<const double> b, const Hyperparams& hp) {
    if (a.size() != b.size()) {
        throw ConfigError("kernel inputs differ in dimension: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = a[i] - b[i];
        d2 += e * e;
    }
    return hp.sigma * hp.sigma * std::exp(-d2 / (2.0 * hp.length_scale * hp.length_scale));
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (X.row(i) - X.row(j)).squaredNorm();
            D(i, j) = d;
            D(j, i) = d;
        }
    }
    return D;
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Hyperparams& hp) {
    hp.validate();
    if (X.rows() < 1) throw ConfigError("Gram matrix needs at least one input");
    check_finite(X, "GP inputs");
    const double s2 = hp.sigma * hp.sigma;
    const double inv = 1.0 / (2.0 * hp.length_scale * hp.length_scale);
    Eigen::MatrixXd K = (-squared_distances(X).array() * inv).exp() * s2;
    check_finite(K, "Gram matrix");
    return K;
}

Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& X, const Hyperparams& hp) {
    if (queries.cols() != X.cols()) {
        throw ConfigError("query dimension " + std::to_string(queries.cols()) + " does not match training dimension " +
                          std::to_string(X.cols()));
    }
    const double s2 = hp.sigma * hp.sigma;
    const double inv = 1.0 / (2.0 * hp.length_scale * hp.length_scale);
    Eigen::MatrixXd Ks(queries.rows(), X.rows());
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            Ks(q, i) = s2 * std::exp(-(queries.row(q) - X.row(i)).squaredNorm() * inv);
        }
    }
    return Ks;
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y_centered, const Hyperparams& hp) {
    if (X.rows() != Y_centered.rows()) throw ConfigError("X and Y row counts differ");
    Eigen::MatrixXd K = gram_matrix(X, hp);
    K.diagonal().array() += hp.jitter;
    const auto f = factorize(K);
    if (!f) throw NumericError("Gram matrix not positive definite, increase jitter");
    return lml_from(*f, Y_centered, &K);
}

MleFit fit_mle(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const MleConfig& config) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw ConfigError("MLE fit needs at least 2 training points");
    if (Y.rows() != n || Y.cols() < 1) throw ConfigError("Y must have one row per input");
    if (config.grid_points < 2 || !(config.grid_low > 0.0) || !(config.grid_high > config.grid_low)) {
        throw ConfigError("invalid length-scale grid");
    }
    check_finite(X, "GP inputs");
    check_finite(Y, "GP targets");
    const Eigen::MatrixXd Yc = Y.rowwise() - column_means(Y);
    if (Yc.squaredNorm() == 0.0) throw ConfigError("targets are constant; nothing to fit");

    const Eigen::MatrixXd D = squared_distances(X);
    std::vector<double> pair;
    pair.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) pair.push_back(std::sqrt(D(i, j)));
    std::nth_element(pair.begin(), pair.begin() + static_cast<std::ptrdiff_t>(pair.size() / 2), pair.end());
    double median = pair[pair.size() / 2];
    if (!(median > 0.0)) {
        median = *std::max_element(pair.begin(), pair.end());
        if (!(median > 0.0)) throw ConfigError("all training inputs coincide");
    }

    MleFit fit;
    const auto evaluate = [&](double l) -> std::optional<MleCandidate> {
        const Eigen::MatrixXd R = (-D.array() / (2.0 * l * l)).exp();
        for (double rel = config.jitter_relative; rel <= config.jitter_relative_max * (1.0 + 1e-12); rel *= 10.0) {
            Eigen::MatrixXd Rj = R;
            Rj.diagonal().array() += rel;
            const auto f = factorize(Rj);
            if (!f) continue;
            // profile sigma^2: average over outputs of y^T R^-1 y / n
            const Eigen::MatrixXd a = f->llt.solve(Yc);
            double s2 = 0.0;
            for (Eigen::Index c = 0; c < Yc.cols(); ++c) s2 += Yc.col(c).dot(a.col(c));
            s2 /= static_cast<double>(n * Yc.cols());
            if (!(s2 > 0.0) || !std::isfinite(s2)) continue;
            MleCandidate cand;
            cand.length_scale = l;
            cand.hp = Hyperparams{std::sqrt(s2), l, rel * s2};
            // K + jI = s2 * (R + rel I): rescale the factor's determinant and solve
            const double m = static_cast<double>(Yc.cols());
            double quad = 0.0;
            for (Eigen::Index c = 0; c < Yc.cols(); ++c) quad += Yc.col(c).dot(a.col(c)) / s2;
            const double log_det = f->log_det + static_cast<double>(n) * std::log(s2);
            cand.lml = -0.5 * quad - 0.5 * m * log_det - 0.5 * m * static_cast<double>(n) * kLog2Pi;
            fit.evaluated.push_back(cand);
            return cand;
        }
        return std::nullopt;
    };

    std::vector<double> grid(static_cast<std::size_t>(config.grid_points));
    const double log_lo = std::log(config.grid_low * median);
    const double log_hi = std::log(config.grid_high * median);
    for (int i = 0; i < config.grid_points; ++i) {
        grid[static_cast<std::size_t>(i)] = std::exp(log_lo + (log_hi - log_lo) * i / (config.grid_points - 1));
    }
    std::optional<MleCandidate> best;
    for (double l : grid) {
        const auto c = evaluate(l);
        if (c && (!best || c->lml > best->lml)) best = c;
    }
    if (!best) throw NumericError("no length-scale candidate produced a positive definite Gram matrix");

    // local refinement: probe the geometric midpoints either side of the incumbent, halving the step
    double step = (log_hi - log_lo) / (config.grid_points - 1);
    for (int round = 0; round < config.refine_rounds; ++round) {
        step *= 0.5;
        const double centre = std::log(best->length_scale);
        for (double probe : {centre - step, centre + step}) {
            const auto c = evaluate(std::exp(probe));
            if (c && c->lml > best->lml) best = c;
        }
    }
    fit.hp = best->hp;
    fit.lml = best->lml;
    return fit;
}

Model Model::fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparams& hp,
                 std::optional<Normalizer> normalizer, PriorMean prior) {
    hp.validate();
    if (X.rows() < 1 || X.rows() != Y.rows()) throw ConfigError("GP fit needs matching, non-empty X and Y");
    check_finite(Y, "GP targets");
    Model m;
    m.hp_ = hp;
    m.normalizer_ = std::move(normalizer);
    m.X_ = m.transform(X);
    m.target_mean_ = prior == PriorMean::training_mean ? column_means(Y) : Eigen::RowVectorXd::Zero(Y.cols());
    Eigen::MatrixXd K = gram_matrix(m.X_, hp);
    K.diagonal().array() += hp.jitter;
    const auto f = factorize(K);
    if (!f) throw NumericError("Gram matrix not positive definite, increase jitter");
    m.alpha_ = refined_solve(*f, K, Y.rowwise() - m.target_mean_);
    return m;
}

Eigen::MatrixXd Model::transform(const Eigen::MatrixXd& raw) const {
    if (!normalizer_) return raw;
    if (static_cast<std::size_t>(raw.cols()) != normalizer_->size()) {
        throw ConfigError("input dimension " + std::to_string(raw.cols()) + " does not match normalizer size " +
                          std::to_string(normalizer_->size()));
    }
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            const auto k = static_cast<std::size_t>(j);
            out(i, j) = (raw(i, j) - normalizer_->mean()[k]) / normalizer_->stddev()[k];
        }
    }
    return out;
}

Eigen::MatrixXd Model::predict_mean(const Eigen::MatrixXd& queries) const {
    if (X_.rows() == 0) throw ConfigError("model is not fitted");
    const Eigen::MatrixXd Ks = cross_kernel(transform(queries), X_, hp_);
    return (Ks * alpha_).rowwise() + target_mean_;
}

Eigen::RowVectorXd Model::predict_mean(std::span<const double> query) const {
    Eigen::MatrixXd q(1, static_cast<Eigen::Index>(query.size()));
    for (std::size_t j = 0; j < query.size(); ++j) q(0, static_cast<Eigen::Index>(j)) = query[j];
    return predict_mean(q).row(0);
}

std::string Model::serialize() const {
    std::ostringstream out;
    out << "SHAPR1 gpr\n";
    out << "sigma " << io::format_sig(hp_.sigma, 17) << '\n';
    out << "length_scale " << io::format_sig(hp_.length_scale, 17) << '\n';
    out << "jitter " << io::format_sig(hp_.jitter, 17) << '\n';
    out << "target_mean " << target_mean_.size() << ' ';
    write_row(out, target_mean_.data(), target_mean_.size());
    if (normalizer_) {
        out << "normalizer " << normalizer_->size() << '\n';
        write_row(out, normalizer_->mean().data(), static_cast<Eigen::Index>(normalizer_->size()));
        write_row(out, normalizer_->stddev().data(), static_cast<Eigen::Index>(normalizer_->size()));
    } else {
        out << "normalizer none\n";
    }
    out << "train " << X_.rows() << ' ' << X_.cols() << '\n';
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
        const Eigen::RowVectorXd r = X_.row(i);
        write_row(out, r.data(), r.size());
    }
    out << "alpha " << alpha_.rows() << ' ' << alpha_.cols() << '\n';
    for (Eigen::Index i = 0; i < alpha_.rows(); ++i) {
        const Eigen::RowVectorXd r = alpha_.row(i);
        write_row(out, r.data(), r.size());
    }
    return out.str();
}

Model Model::deserialize(std::string_view text, const std::string& source) {
    const auto lines = io::split(text, '\n');
    std::size_t li = 0;
    const auto next = [&]() -> std::vector<std::string_view> {
        if (li >= lines.size()) throw ParseError(source, li, "unexpected end of model file");
        auto parts = io::split(io::trim(lines[li++]), ' ');
        return parts;
    };
    const auto number = [&](std::string_view s) {
        double v = 0.0;
        if (!io::parse_double(s, v)) throw ParseError(source, li, "bad number '" + std::string(s) + "'");
        return v;
    };
    const auto count = [&](std::string_view s) {
        unsigned long long v = 0;
        if (!io::parse_u64(s, v)) throw ParseError(source, li, "bad count '" + std::string(s) + "'");
        return static_cast<Eigen::Index>(v);
    };
    const auto keyed = [&](const char* key, std::size_t arity) {
        auto p = next();
        if (p.empty() || p[0] != key || p.size() != arity + 1) {
            throw ParseError(source, li, std::string("expected '") + key + "'");
        }
        return p;
    };
    const auto row = [&](Eigen::Index n) {
        auto p = next();
        if (static_cast<Eigen::Index>(p.size()) != n) throw ParseError(source, li, "row has wrong length");
        std::vector<double> v;
        for (auto s : p) v.push_back(number(s));
        return v;
    };

    if (io::trim(lines.empty() ? std::string_view() : lines[0]) != "SHAPR1 gpr") {
        throw ParseError(source, 1, "not a GPR model file (expected 'SHAPR1 gpr')");
    }
    li = 1;
    Model m;
    m.hp_.sigma = number(keyed("sigma", 1)[1]);
    m.hp_.length_scale = number(keyed("length_scale", 1)[1]);
    m.hp_.jitter = number(keyed("jitter", 1)[1]);
    try {
        m.hp_.validate();
    } catch (const ConfigError& e) {
        throw ParseError(source, li, e.what());
    }
    {
        auto p = next();
        if (p.size() < 2 || p[0] != "target_mean") throw ParseError(source, li, "expected 'target_mean'");
        const auto k = count(p[1]);
        if (static_cast<Eigen::Index>(p.size()) != k + 2) throw ParseError(source, li, "target_mean length mismatch");
        m.target_mean_.resize(k);
        for (Eigen::Index j = 0; j < k; ++j) m.target_mean_(j) = number(p[static_cast<std::size_t>(j + 2)]);
    }
    {
        auto p = keyed("normalizer", 1);
        if (p[1] != "none") {
            const auto k = count(p[1]);
            auto mean = row(k);
            auto sd = row(k);
            try {
                m.normalizer_ = Normalizer(std::move(mean), std::move(sd));
            } catch (const ConfigError& e) {
                throw ParseError(source, li, e.what());
            }
        }
    }
    auto t = keyed("train", 2);
    const auto n = count(t[1]);
    const auto d = count(t[2]);
    m.X_.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = row(d);
        for (Eigen::Index j = 0; j < d; ++j) m.X_(i, j) = r[static_cast<std::size_t>(j)];
    }
    auto a = keyed("alpha", 2);
    if (count(a[1]) != n || count(a[2]) != m.target_mean_.size()) throw ParseError(source, li, "alpha shape mismatch");
    m.alpha_.resize(n, m.target_mean_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = row(m.target_mean_.size());
        for (Eigen::Index j = 0; j < m.alpha_.cols(); ++j) m.alpha_(i, j) = r[static_cast<std::size_t>(j)];
    }
    if (m.normalizer_ && static_cast<Eigen::Index>(m.normalizer_->size()) != d) {
        throw ParseError(source, 0, "normalizer size does not match input dimension");
    }
    return m;
}

double localization_error(const Point2& predicted, const Point2& actual) {
    return distance(predicted, actual);
}

double mean_error(std::span<const std::pair<Point2, Point2>> pairs) {
    if (pairs.empty()) throw ConfigError("mean error of an empty set");
    double sum = 0.0;
    for (const auto& [p, a] : pairs) sum += localization_error(p, a);
    return sum / static_cast<double>(pairs.size());
}

}  // namespace shapr::gpr
