#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "shapr/error.hpp"
#include "shapr/gpr.hpp"

using namespace shapr;
using namespace shapr::gpr;

namespace {

// dense-inverse reference, no factorizations shared with the library
struct Dense {
    Eigen::MatrixXd K;
    Eigen::MatrixXd Kinv;
    double logdet;
};

Dense dense(const Eigen::MatrixXd& X, const Hyperparams& hp) {
    const Eigen::Index n = X.rows();
    Dense d;
    d.K.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r2 = (X.row(i) - X.row(j)).squaredNorm();
            d.K(i, j) = hp.sigma * hp.sigma * std::exp(-r2 / (2 * hp.length_scale * hp.length_scale));
        }
    }
    d.K.diagonal().array() += hp.jitter;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(d.K);
    d.Kinv = lu.inverse();
    d.logdet = std::log(lu.determinant());
    return d;
}

double oracle_lml(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Yc, const Hyperparams& hp) {
    const auto d = dense(X, hp);
    double total = 0;
    for (Eigen::Index c = 0; c < Yc.cols(); ++c) {
        const Eigen::VectorXd y = Yc.col(c);
        total += -0.5 * y.dot(d.Kinv * y) - 0.5 * d.logdet - 0.5 * X.rows() * std::log(2 * std::numbers::pi);
    }
    return total;
}

Eigen::MatrixXd oracle_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparams& hp,
                               const Eigen::MatrixXd& Q) {
    const auto d = dense(X, hp);
    const Eigen::RowVectorXd mu = Y.colwise().mean();
    Eigen::MatrixXd Ks(Q.rows(), X.rows());
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.rows(); ++j) {
            Ks(i, j) = hp.sigma * hp.sigma *
                       std::exp(-(Q.row(i) - X.row(j)).squaredNorm() / (2 * hp.length_scale * hp.length_scale));
        }
    }
    return (Ks * d.Kinv * (Y.rowwise() - mu)).rowwise() + mu;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

}  // namespace

TEST_SUITE("gpr") {

TEST_CASE("kernel hand values") {
    const std::vector<double> a{0, 0}, b{1, 1};
    CHECK(kernel(a, b, {2.0, 1.0, 0.0}) == doctest::Approx(1.471518).epsilon(1e-6));
    CHECK(kernel(a, a, {2.0, 1.0, 0.0}) == doctest::Approx(4.0));
    Eigen::MatrixXd X(2, 1);
    X << 0, 1;
    const auto K = gram_matrix(X, {1.0, 1.0, 0.0});
    CHECK(K(0, 1) == doctest::Approx(0.606531).epsilon(1e-6));
    CHECK(K(0, 1) == K(1, 0));
    CHECK(K(0, 0) == 1.0);
}

TEST_CASE("hyperparameters are validated") {
    CHECK_THROWS_AS(Hyperparams({0.0, 1.0, 0.0}).validate(), ConfigError);
    CHECK_THROWS_AS(Hyperparams({1.0, -1.0, 0.0}).validate(), ConfigError);
    CHECK_THROWS_AS(Hyperparams({1.0, 1.0, std::nan("")}).validate(), ConfigError);
}

TEST_CASE("single point likelihood") {
    Eigen::MatrixXd X(1, 1), Y(1, 1);
    X << 0;
    Y << 2;
    CHECK(log_marginal_likelihood(X, Y, {1, 1, 0}) == doctest::Approx(-2.918939).epsilon(1e-6));
}

TEST_CASE("zero targets leave only the determinant terms") {
    std::mt19937_64 rng(11);
    const auto X = random_matrix(6, 3, rng);
    const Hyperparams hp{1.3, 0.9, 1e-6};
    const auto d = dense(X, hp);
    CHECK(log_marginal_likelihood(X, Eigen::MatrixXd::Zero(6, 1), hp) ==
          doctest::Approx(-0.5 * d.logdet - 3.0 * std::log(2 * std::numbers::pi)).epsilon(1e-10));
}

TEST_CASE("posterior mean between two points") {
    Eigen::MatrixXd X(2, 1), Y(2, 1), Q(1, 1);
    X << 0, 1;
    Y << 0, 1;
    Q << 0.5;
    const auto zero = Model::fit(X, Y, {1, 1, 0}, std::nullopt, PriorMean::zero);
    CHECK(zero.predict_mean(Q)(0, 0) == doctest::Approx(0.549319).epsilon(1e-6));
    // centered: symmetric about the mean
    const auto centered = Model::fit(X, Y, {1, 1, 0});
    CHECK(centered.predict_mean(Q)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("antisymmetric data predicts zero in the middle") {
    Eigen::MatrixXd X(2, 1), Y(2, 1), Q(1, 1);
    X << -1, 1;
    Y << -2, 2;
    Q << 0;
    for (auto prior : {PriorMean::training_mean, PriorMean::zero}) {
        CHECK(std::abs(Model::fit(X, Y, {1, 1, 0}, std::nullopt, prior).predict_mean(Q)(0, 0)) < 1e-10);
    }
}

TEST_CASE("matches dense inverse on random problems") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nd(2, 20), dd(1, 10);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int t = 0; t < 50; ++t) {
        const int n = nd(rng), d = dd(rng);
        const auto X = random_matrix(n, d, rng);
        const auto Y = random_matrix(n, 2, rng);
        const auto Q = random_matrix(4, d, rng);
        const Hyperparams hp{u(rng), u(rng) * std::sqrt(static_cast<double>(d)), 1e-3};
        const auto model = Model::fit(X, Y, hp);
        const auto got = model.predict_mean(Q);
        const auto want = oracle_predict(X, Y, hp, Q);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
        const Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
        CHECK(std::abs(log_marginal_likelihood(X, Yc, hp) - oracle_lml(X, Yc, hp)) < 1e-8);
    }
}

TEST_CASE("large targets on ill-conditioned gram matrices") {
    // likelihoods near -1e5: double rounding of K alone moves them by ~1e-8
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nd(2, 20), dd(1, 10);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int t = 0; t < 50; ++t) {
        const int n = nd(rng), d = dd(rng);
        const auto X = random_matrix(n, d, rng);
        const auto Y = random_matrix(n, 2, rng, 3.0);
        const auto Q = random_matrix(4, d, rng);
        const Hyperparams hp{u(rng), u(rng) * std::sqrt(static_cast<double>(d)), 1e-3};
        CHECK((Model::fit(X, Y, hp).predict_mean(Q) - oracle_predict(X, Y, hp, Q)).cwiseAbs().maxCoeff() < 1e-8);
        const Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
        const double want = oracle_lml(X, Yc, hp);
        CHECK(std::abs(log_marginal_likelihood(X, Yc, hp) - want) <= 1e-12 * std::abs(want));
    }
}

TEST_CASE("interpolates training targets without jitter") {
    std::mt19937_64 rng(5);
    const auto X = random_matrix(8, 3, rng, 2.0);
    const auto Y = random_matrix(8, 2, rng);
    const auto m = Model::fit(X, Y, {1.0, 1.0, 0.0});
    CHECK((m.predict_mean(X) - Y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gram matrix is symmetric and positive semidefinite") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        const auto X = random_matrix(15, 4, rng);
        const auto K = gram_matrix(X, {1.5, 0.8, 0.0});
        CHECK(K == K.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        const auto D = squared_distances(X);
        CHECK(D == D.transpose());
        CHECK(D.diagonal().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("training order does not change predictions") {
    std::mt19937_64 rng(31);
    const auto X = random_matrix(12, 5, rng);
    const auto Y = random_matrix(12, 2, rng);
    const auto Q = random_matrix(3, 5, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(12);
    P.setIdentity();
    std::shuffle(P.indices().data(), P.indices().data() + 12, rng);
    const Hyperparams hp{1.0, 2.0, 1e-6};
    const auto a = Model::fit(X, Y, hp).predict_mean(Q);
    const auto b = Model::fit(P * X, P * Y, hp).predict_mean(Q);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("singular gram matrix without jitter is reported") {
    Eigen::MatrixXd X(2, 1), Y(2, 1);
    X << 1, 1;
    Y << 0, 1;
    try {
        Model::fit(X, Y, {1, 1, 0});
        FAIL("expected a factorization error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("increase jitter") != std::string::npos);
    }
}

TEST_CASE("mle recovers a known length scale") {
    std::mt19937_64 rng(77);
    const int n = 40;
    const auto X = random_matrix(n, 1, rng, 1.5);
    const Hyperparams truth{1.0, 0.5, 1e-8};
    const auto d = dense(X, truth);
    Eigen::LLT<Eigen::MatrixXd> llt(d.K);
    const Eigen::MatrixXd Y = llt.matrixL() * random_matrix(n, 1, rng);
    const auto fit = fit_mle(X, Y);
    CHECK(fit.hp.length_scale >= 0.25);
    CHECK(fit.hp.length_scale <= 1.0);
    for (const auto& c : fit.evaluated) CHECK(fit.lml >= c.lml);
}

TEST_CASE("mle sigma scales with the targets") {
    std::mt19937_64 rng(12);
    const auto X = random_matrix(15, 3, rng);
    const auto Y = random_matrix(15, 2, rng);
    const auto a = fit_mle(X, Y);
    const auto b = fit_mle(X, 4.0 * Y);
    CHECK(b.hp.sigma == doctest::Approx(4.0 * a.hp.sigma).epsilon(1e-9));
    CHECK(b.hp.length_scale == doctest::Approx(a.hp.length_scale).epsilon(1e-12));
    CHECK_THROWS(fit_mle(X.topRows(1), Y.topRows(1)));
}

TEST_CASE("model text round trip predicts identically") {
    std::mt19937_64 rng(4);
    const auto X = random_matrix(10, 4, rng, 3.0);
    const auto Y = random_matrix(10, 2, rng);
    std::vector<std::vector<double>> xs(10, std::vector<double>(4));
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 4; ++j) xs[i][j] = X(i, j);
    const auto m = Model::fit(X, Y, {1.2, 1.7, 1e-6}, Normalizer::fit(xs));
    const auto text = m.serialize();
    CHECK(text.rfind("SHAPR1 gpr", 0) == 0);
    const auto back = Model::deserialize(text);
    const auto Q = random_matrix(5, 4, rng, 3.0);
    CHECK(back.predict_mean(Q) == m.predict_mean(Q));
    CHECK(back.serialize() == text);
    CHECK_THROWS_AS(Model::deserialize("SHAPR1 knn\n"), ParseError);
}

TEST_CASE("query dimension must match") {
    Eigen::MatrixXd X(2, 2), Y(2, 2);
    X << 0, 0, 1, 1;
    Y << 0, 0, 1, 1;
    const auto m = Model::fit(X, Y, {1, 1, 0});
    CHECK_THROWS(m.predict_mean(Eigen::MatrixXd::Zero(1, 3)));
}

TEST_CASE("localization error") {
    CHECK(localization_error({1, 1}, {1, 1}) == 0.0);
    CHECK(localization_error({0, 0}, {3, 4}) == doctest::Approx(5.0));
    const std::vector<std::pair<Point2, Point2>> pairs{{{0, 0}, {3, 4}}, {{1, 1}, {1, 1}}};
    CHECK(mean_error(pairs) == doctest::Approx(2.5));
    CHECK_THROWS_AS(mean_error({}), ConfigError);
}

}
