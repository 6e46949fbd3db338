#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace unmixer;
using namespace unmixer::synth;

TEST(Kinetics, StartsAtInitialConcentrations)
{
    const Vector h0 = Vector::Unit(5, 0);
    const Matrix h = kinetics({five_species_rate_matrix(), h0, linspace(0.0, 20.0, 200)});
    EXPECT_EQ(h.col(0), h0);
}

TEST(Kinetics, ColumnsConserveMassAndStayInRange)
{
    const Matrix h = kinetics({five_species_rate_matrix(), Vector::Unit(5, 0), linspace(0.0, 300.0, 301)});
    EXPECT_LE((h.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_GE(h.minCoeff(), -1e-12);
    EXPECT_LE(h.maxCoeff(), 1.0 + 1e-12);
}

TEST(Kinetics, ProductAccumulatesSlowly)
{
    // the slowest nonzero mode of the rate matrix decays like exp(-0.0289 t),
    // so the product D is far from pure at t = 50 and close to it by t = 300
    const Matrix h = kinetics({five_species_rate_matrix(), Vector::Unit(5, 0), linspace(0.0, 300.0, 7)});
    EXPECT_NEAR(h(3, 1), 0.8500245511919817, 1e-12);   // t = 50
    const double expected[] = {0.9647, 0.9917, 0.99805, 0.99989};
    for (Eigen::Index k = 2; k < 5; ++k) {
        EXPECT_NEAR(h(3, k), expected[k - 2], 1e-4) << "t = " << 50 * k;
    }
    EXPECT_NEAR(h(3, 6), expected[3], 1e-4);
    EXPECT_GE(h(3, 6), 0.999);
}

TEST(Kinetics, ZeroRateMatrixIsStatic)
{
    Vector h0(3);
    h0 << 0.2, 0.3, 0.5;
    const Matrix h = kinetics({Matrix::Zero(3, 3), h0, linspace(0.0, 5.0, 6)});
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
        EXPECT_EQ(h.col(j), h0);
    }
}

TEST(Kinetics, InvalidSpecsRejected)
{
    Matrix k = five_species_rate_matrix();
    k(0, 0) = -0.5;   // row no longer sums to zero
    EXPECT_THROW(kinetics({k, Vector::Unit(5, 0), linspace(0, 1, 3)}), DataError);
    EXPECT_THROW(kinetics({five_species_rate_matrix(), Vector::Ones(5), linspace(0, 1, 3)}), DataError);
    Vector uneven(3);
    uneven << 0.0, 1.0, 3.0;
    EXPECT_THROW(kinetics({five_species_rate_matrix(), Vector::Unit(5, 0), uneven}), DataError);
}

TEST(Spectra, HalfMaximumAtOneWidth)
{
    Vector grid(3);
    grid << 490.0, 500.0, 510.0;
    const Matrix w = spectra({{Peak{500.0, 1.0, 10.0}}}, grid);
    EXPECT_DOUBLE_EQ(w(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(w(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(w(2, 0), 0.5);
}

TEST(Spectra, IdenticalPeaksAddLinearly)
{
    const Vector grid = linspace(100.0, 1800.0, 200);
    const Peak p{640.0, 3.0, 12.0};
    const Matrix one = spectra({{p}}, grid);
    const Matrix two = spectra({{p, p}}, grid);
    EXPECT_EQ(two, 2.0 * one);
}

TEST(Spectra, SeededPeaksArePositiveWithExpectedMaxima)
{
    const Vector grid = linspace(100.0, 1800.0, 1000);
    const PeakList peaks = random_peaks(5, {}, 2021);
    const Matrix w = spectra(peaks, grid);
    EXPECT_GT(w.minCoeff(), 0.0);
    for (std::size_t s = 0; s < peaks.size(); ++s) {
        // largest stack at any on-grid peak center
        double stack = 0.0;
        for (const Peak& p : peaks[s]) {
            Eigen::Index nearest = 0;
            (grid.array() - p.center).abs().minCoeff(&nearest);
            stack = std::max(stack, w(nearest, static_cast<Eigen::Index>(s)));
        }
        const double col_max = w.col(static_cast<Eigen::Index>(s)).maxCoeff();
        EXPECT_LE(std::abs(col_max - stack), 0.05 * col_max) << "species " << s;
    }
}

TEST(Spectra, InvalidPeaksRejected)
{
    const Vector grid = linspace(100.0, 200.0, 11);
    EXPECT_THROW(spectra({{}}, grid), DataError);
    EXPECT_THROW(spectra({{Peak{150.0, 1.0, 0.0}}}, grid), DataError);
    EXPECT_THROW(spectra({{Peak{250.0, 1.0, 1.0}}}, grid), DataError);
}

TEST(Interfere, Endpoints)
{
    const PeakList peaks = random_peaks(3, {}, 5);
    const std::vector<double> focals{525.0, 950.0, 1375.0};
    const PeakList same = interfere(peaks, focals, 0.0);
    const PeakList snapped = interfere(peaks, focals, 1.0);
    for (std::size_t s = 0; s < peaks.size(); ++s) {
        for (std::size_t k = 0; k < peaks[s].size(); ++k) {
            EXPECT_EQ(same[s][k].center, peaks[s][k].center);
            const double c = snapped[s][k].center;
            EXPECT_TRUE(c == 525.0 || c == 950.0 || c == 1375.0);
            EXPECT_EQ(snapped[s][k].amplitude, peaks[s][k].amplitude);
            EXPECT_EQ(snapped[s][k].width, peaks[s][k].width);
        }
    }
}

TEST(Interfere, MidpointAndTieBreak)
{
    const PeakList moved = interfere({{Peak{400.0, 1.0, 1.0}, Peak{450.0, 1.0, 1.0}}}, {600.0, 300.0}, 0.5);
    EXPECT_DOUBLE_EQ(moved[0][0].center, 350.0);
    EXPECT_DOUBLE_EQ(moved[0][1].center, 375.0);   // 450 is equidistant; the lower focal wins
}

TEST(Interfere, DistanceIsMonotoneInLambda)
{
    const PeakList peaks = random_peaks(4, {}, 6);
    const std::vector<double> focals{525.0, 950.0, 1375.0};
    double previous_total = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        const PeakList moved = interfere(peaks, focals, lambda);
        double total = 0.0;
        for (const auto& species : moved) {
            for (const Peak& p : species) {
                double d = std::numeric_limits<double>::infinity();
                for (double f : focals) {
                    d = std::min(d, std::abs(p.center - f));
                }
                total += d;
            }
        }
        EXPECT_LE(total, previous_total + 1e-9);
        previous_total = total;
    }
    EXPECT_THROW(interfere(peaks, {}, 0.5), DataError);
    EXPECT_THROW(interfere(peaks, focals, 1.5), DataError);
}

TEST(Compose, MatchesNaiveTripleLoop)
{
    const Matrix w = support::random_matrix(10, 3, 1, 0.0, 1.0);
    const Matrix h = support::random_matrix(3, 7, 2, 0.0, 1.0);
    const Matrix m = compose(w, h).values();
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 7; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                s += w(i, k) * h(k, j);
            }
            EXPECT_NEAR(m(i, j), s, 1e-15);
        }
    }
}

TEST(Compose, IdentityAndRankOne)
{
    const Matrix w = support::random_matrix(6, 3, 3, 0.0, 1.0);
    EXPECT_EQ(compose(w, Matrix::Identity(3, 3)).values(), w);
    const Matrix m = compose(w.col(0), support::random_matrix(1, 4, 4, 0.5, 1.0)).values();
    for (Eigen::Index j = 1; j < 4; ++j) {
        EXPECT_NEAR(linalg::pearson(m.col(0), m.col(j)), 1.0, 1e-12);
    }
    EXPECT_THROW(compose(w, Matrix::Ones(2, 2)), DataError);
}

TEST(Compose, KineticsColumnsAreConvexCombinations)
{
    const auto& d = support::default_dataset();
    const Matrix& m = d.m.values();
    const Vector lo = d.w.rowwise().minCoeff();
    const Vector hi = d.w.rowwise().maxCoeff();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        EXPECT_TRUE(((m.col(j) - lo).array() >= -1e-12).all());
        EXPECT_TRUE(((hi - m.col(j)).array() >= -1e-12).all());
    }
}

TEST(Noise, ZeroDeltaIsExact)
{
    const SpectralMatrix m(support::random_matrix(5, 5, 7, 0.0, 1.0));
    EXPECT_EQ(add_noise(m, {0.0, 3}).values(), m.values());
}

TEST(Noise, HalfNormalMeanAndDeterminism)
{
    const SpectralMatrix m(Matrix::Zero(1000, 200));
    const SpectralMatrix a = add_noise(m, {0.5, 42});
    const double expected = 0.5 * std::sqrt(2.0 / M_PI);
    EXPECT_NEAR(a.values().mean(), expected, 0.02 * expected);
    EXPECT_GE(a.values().minCoeff(), 0.0);
    EXPECT_EQ(add_noise(m, {0.5, 42}).values(), a.values());
    EXPECT_THROW(add_noise(m, {-1.0, 0}), DataError);
}

TEST(Transition, EstimateRecoversMarkovChain)
{
    const Matrix p = support::markov_p_true();
    Vector h0(3);
    h0 << 0.2, 0.3, 0.5;
    const Matrix h = markov_kinetics(p, h0, 80);
    EXPECT_LE((estimate_transition(h) - p).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Dataset, DefaultShapes)
{
    const auto& d = support::default_dataset();
    EXPECT_EQ(d.m.wavenumbers(), 1000);
    EXPECT_EQ(d.m.timesteps(), 200);
    EXPECT_EQ(d.w.cols(), 5);
    EXPECT_EQ(d.p.rows(), 5);
    EXPECT_EQ(d.times(199), 20.0);
    EXPECT_EQ(d.wavenumbers(0), 100.0);
    EXPECT_GE(d.m.values().minCoeff(), 0.0);
}

TEST(Dataset, ConfigErrorsNameTheKey)
{
    nlohmann::json j = synth::to_json(default_dataset_config());
    EXPECT_NO_THROW(parse_dataset_config(j));

    auto expect_key = [](const nlohmann::json& cfg, const std::string& key) {
        try {
            parse_dataset_config(cfg);
            ADD_FAILURE() << "expected ConfigError for " << key;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
        }
    };
    nlohmann::json bad = j;
    bad["kinetics"]["rate_matrix"][1][1] = 0.5;
    expect_key(bad, "kinetics.rate_matrix[1]");
    bad = j;
    bad["kinetics"].erase("h0");
    expect_key(bad, "kinetics.h0");
    bad = j;
    bad["time"]["count"] = "many";
    expect_key(bad, "time.count");
    bad = j;
    bad["noise"]["delta"] = -1.0;
    expect_key(bad, "noise.delta");
    bad = j;
    bad["schema_version"] = 9;
    expect_key(bad, "schema_version");
    bad = j;
    bad["interference"] = {{"lambda", 0.5}};
    expect_key(bad, "interference.focals");
}

TEST(Dataset, ConfigRoundTripsThroughJson)
{
    DatasetConfig c = default_dataset_config();
    c.lambda = 0.6;
    c.focals = {525.0, 950.0, 1375.0};
    c.noise = {0.5, 9};
    const DatasetConfig back = parse_dataset_config(synth::to_json(c));
    const Dataset a = generate(c);
    const Dataset b = generate(back);
    EXPECT_EQ(a.m.values(), b.m.values());
}
