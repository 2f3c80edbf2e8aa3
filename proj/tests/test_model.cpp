#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "bds/dataset.hpp"
#include "bds/model_spec.hpp"
#include "bds/types.hpp"

using namespace bds;

namespace {

Genotype geno(std::initializer_list<const char*> sites) {
  std::vector<std::string> v;
  for (const char* s : sites) v.emplace_back(s);
  return Genotype(std::move(v));
}

}  // namespace

TEST(ReducePair, WorkedExampleShiftPlusBirth) {
  // six initial sites; one shifts away, and a birth lands on a fresh site:
  // (6,0) -> (5,2)
  const Genotype g1 = geno({"b1", "b2", "b3", "b4", "b5", "b6"});
  const Genotype g2 = geno({"b1", "b2", "b3", "b4", "b5", "n1", "n2"});
  const ReducedInterval iv = reduce_pair(g1, g2, 1.0);
  EXPECT_EQ(iv.a, 6);
  EXPECT_EQ(iv.b, 5);
  EXPECT_EQ(iv.c_new, 2);
}

TEST(ReducePair, IdentityInterval) {
  const Genotype g = geno({"x", "y", "z"});
  const ReducedInterval iv = reduce_pair(g, g, 2.5);
  EXPECT_EQ(iv.a, 3);
  EXPECT_EQ(iv.b, 3);
  EXPECT_EQ(iv.c_new, 0);
  EXPECT_TRUE(iv.no_change());
}

TEST(ReducePair, DisjointSets) {
  const ReducedInterval iv = reduce_pair(geno({"s1", "s2", "s3"}), geno({"s4"}), 1.0);
  EXPECT_EQ(iv.a, 3);
  EXPECT_EQ(iv.b, 0);
  EXPECT_EQ(iv.c_new, 1);
}

TEST(ReducePair, RejectsNonPositiveDt) {
  EXPECT_THROW(reduce_pair(geno({"a"}), geno({"a"}), 0.0), ValidationError);
  EXPECT_THROW(reduce_pair(geno({"a"}), geno({"a"}), -1.0), ValidationError);
}

TEST(ReducePair, PermutationInvariance) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> pool;
    for (int i = 0; i < 12; ++i) pool.push_back("s" + std::to_string(i));
    std::vector<std::string> g1v, g2v;
    for (const auto& s : pool) {
      if (rng() % 2) g1v.push_back(s);
      if (rng() % 2) g2v.push_back(s);
    }
    const ReducedInterval base = reduce_pair(Genotype(g1v), Genotype(g2v), 1.0);

    // relabel consistently with a random permutation of the pool
    std::vector<std::string> renamed = pool;
    std::shuffle(renamed.begin(), renamed.end(), rng);
    auto rename = [&](const std::vector<std::string>& v) {
      std::vector<std::string> out;
      for (const auto& s : v)
        for (std::size_t i = 0; i < pool.size(); ++i)
          if (pool[i] == s) out.push_back(renamed[i]);
      return Genotype(out);
    };
    const ReducedInterval perm = reduce_pair(rename(g1v), rename(g2v), 1.0);
    EXPECT_EQ(base.a, perm.a);
    EXPECT_EQ(base.b, perm.b);
    EXPECT_EQ(base.c_new, perm.c_new);

    // lost and gained counts are non-negative by construction
    EXPECT_GE(base.a - base.b, 0);
    EXPECT_GE(base.c_new, 0);
  }
}

TEST(Genotype, RejectsDuplicates) {
  EXPECT_THROW(geno({"a", "b", "a"}), ValidationError);
}

TEST(RatesFromCovariates, InterceptOnly) {
  RegressionCoefficients beta;
  beta.beta_lambda = Eigen::VectorXd::Constant(1, std::log(0.0188));
  beta.beta_nu = Eigen::VectorXd::Constant(1, std::log(0.00268));
  beta.beta_mu = Eigen::VectorXd::Constant(1, std::log(0.0147));
  const RateTriple r = rates_from_covariates(beta, Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(r.lambda, 0.0188, 1e-15);
  EXPECT_NEAR(r.nu, 0.00268, 1e-15);
  EXPECT_NEAR(r.mu, 0.0147, 1e-15);
}

TEST(RatesFromCovariates, AllZeroBeta) {
  RegressionCoefficients beta;
  beta.beta_lambda = beta.beta_nu = beta.beta_mu = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd z(3);
  z << 1.0, -2.0, 5.5;
  const RateTriple r = rates_from_covariates(beta, z);
  EXPECT_DOUBLE_EQ(r.lambda, 1.0);
  EXPECT_DOUBLE_EQ(r.nu, 1.0);
  EXPECT_DOUBLE_EQ(r.mu, 1.0);
}

TEST(RatesFromCovariates, BinaryCovariateMultiplier) {
  // beta_mu = (x, 2.028), z = (1,1): mu = exp(x) * exp(2.028) = exp(x)*7.599
  RegressionCoefficients beta;
  beta.beta_lambda = beta.beta_nu = Eigen::VectorXd::Zero(2);
  beta.beta_mu = Eigen::VectorXd(2);
  const double x = -3.1;
  beta.beta_mu << x, 2.028;
  Eigen::VectorXd z(2);
  z << 1.0, 1.0;
  const RateTriple r = rates_from_covariates(beta, z);
  EXPECT_NEAR(r.mu / std::exp(x), 7.599, 5e-4);
}

TEST(RatesFromCovariates, DimensionMismatchRejected) {
  RegressionCoefficients beta;
  beta.beta_lambda = beta.beta_nu = beta.beta_mu = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(rates_from_covariates(beta, Eigen::VectorXd::Ones(3)), ValidationError);
}

TEST(RatesFromCovariates, OverflowReported) {
  RegressionCoefficients beta;
  beta.beta_lambda = beta.beta_nu = beta.beta_mu = Eigen::VectorXd::Constant(1, 800.0);
  EXPECT_THROW(rates_from_covariates(beta, Eigen::VectorXd::Ones(1)), NumericError);
}

TEST(RatesFromCovariates, MonotoneAndLogRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    RegressionCoefficients beta;
    beta.beta_lambda = beta.beta_nu = beta.beta_mu = Eigen::VectorXd::Zero(2);
    beta.beta_lambda << u(rng), u(rng);
    Eigen::VectorXd z(2);
    z << 1.0, std::abs(u(rng));  // z >= 0
    const double lam0 = rates_from_covariates(beta, z).lambda;
    RegressionCoefficients bumped = beta;
    bumped.beta_lambda[1] += 0.25;
    EXPECT_GT(rates_from_covariates(bumped, z).lambda, lam0 - 1e-300);
    EXPECT_NEAR(std::log(lam0), beta.beta_lambda.dot(z), 1e-12 * (1 + std::abs(std::log(lam0))));
  }
}

// --- dataset validation ----------------------------------------------------

namespace {

std::filesystem::path tmp_dir() {
  auto p = std::filesystem::temp_directory_path() / "bds_model_test";
  std::filesystem::create_directories(p);
  return p;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(ValidateDataset, GenotypeLongFormBasics) {
  std::vector<GenotypeRow> rows{
      {"p1", 0.0, "s1", 2}, {"p1", 0.0, "s2", 3}, {"p1", 1.5, "s2", 4},
      {"p1", 1.5, "s3", 5}, {"p2", 0.0, "s9", 6}, {"p2", 2.0, "s9", 7},
  };
  const PanelDataset data = validate_dataset(rows, nullptr);
  ASSERT_EQ(data.patients.size(), 2u);
  ASSERT_EQ(data.patients[0].intervals.size(), 1u);
  const ReducedInterval& iv = data.patients[0].intervals[0];
  EXPECT_EQ(iv.a, 2);
  EXPECT_EQ(iv.b, 1);
  EXPECT_EQ(iv.c_new, 1);
  EXPECT_DOUBLE_EQ(iv.dt(), 1.5);
  EXPECT_TRUE(data.patients[1].intervals[0].no_change());
  EXPECT_EQ(data.n_intervals(), 2);
  EXPECT_EQ(data.n_observations(), 4);
}

TEST(ValidateDataset, UnsortedTimesRejectedWithRowDiagnostics) {
  std::vector<GenotypeRow> rows{
      {"p1", 1.0, "s1", 2}, {"p1", 0.5, "s1", 3}, {"p1", 2.0, "s1", 4}};
  try {
    validate_dataset(rows, nullptr);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ValidateDataset, DuplicateTimeRejected) {
  std::vector<GenotypeRow> rows{
      {"p1", 0.0, "s1", 2}, {"p1", 1.0, "s1", 3}, {"p1", 0.0, "s2", 4}};
  EXPECT_THROW(validate_dataset(rows, nullptr), ValidationError);
}

TEST(ValidateDataset, SingleObservationPatientRejected) {
  std::vector<GenotypeRow> rows{{"p1", 0.0, "s1", 2}};
  EXPECT_THROW(validate_dataset(rows, nullptr), ValidationError);
}

TEST(ValidateDataset, MissingCovariateRowRejected) {
  std::vector<GenotypeRow> rows{{"p1", 0.0, "s1", 2}, {"p1", 1.0, "s1", 3}};
  CovariateTable cov;
  cov.names = {"EI"};
  cov.rows.push_back({"someone_else", Eigen::VectorXd::Ones(1)});
  EXPECT_THROW(validate_dataset(rows, &cov), ValidationError);
}

TEST(ValidateDataset, ReducedRowsAttachAndValidate) {
  std::vector<ReducedRow> rows{
      {"p1", 0.0, 0.4, 5, 5, 0, 2}, {"p1", 0.4, 0.8, 12, 11, 1, 3},
      {"p2", 0.0, 1.0, 0, 0, 0, 4},
  };
  const PanelDataset data = validate_dataset(rows, nullptr);
  EXPECT_EQ(data.n_intervals(), 3);
  EXPECT_EQ(data.max_count(), 12);
  EXPECT_TRUE(data.patients[0].intervals[0].no_change());
  EXPECT_EQ(data.n_changed_intervals(), 1);
}

TEST(ValidateDataset, ReducedRejectsBadCounts) {
  std::vector<ReducedRow> bad{{"p1", 0.0, 1.0, 3, 4, 0, 2}};  // b > a
  EXPECT_THROW(validate_dataset(bad, nullptr), ValidationError);
  std::vector<ReducedRow> overlap{{"p1", 0.0, 1.0, 3, 3, 0, 2},
                                  {"p1", 0.5, 1.5, 3, 3, 0, 3}};
  EXPECT_THROW(validate_dataset(overlap, nullptr), ValidationError);
}

TEST(CsvIo, GenotypeRoundTrip) {
  const auto dir = tmp_dir();
  const auto path = dir / "geno.csv";
  write_file(path,
             "patient_id,time,site_id\n"
             "p1,0,s1\np1,0,s2\np1,1.5,s2\np1,1.5,s3\n");
  const PanelDataset data = validate_dataset(read_genotype_csv(path.string()), nullptr);
  const auto out = dir / "geno_out.csv";
  write_genotype_csv(out.string(), data);
  const PanelDataset again = validate_dataset(read_genotype_csv(out.string()), nullptr);
  ASSERT_EQ(again.n_intervals(), 1);
  EXPECT_EQ(again.patients[0].intervals[0].a, 2);
  EXPECT_EQ(again.patients[0].intervals[0].b, 1);
  EXPECT_EQ(again.patients[0].intervals[0].c_new, 1);
}

TEST(CsvIo, RejectsQuoting) {
  const auto dir = tmp_dir();
  const auto path = dir / "quoted.csv";
  write_file(path, "patient_id,time,site_id\n\"p,1\",0,s1\n");
  EXPECT_THROW(read_genotype_csv(path.string()), ValidationError);
}

TEST(CsvIo, CovariateWidthMismatch) {
  const auto dir = tmp_dir();
  const auto path = dir / "cov.csv";
  write_file(path, "patient_id,EI,HIV\np1,1,0\np2,1\n");
  EXPECT_THROW(read_covariates_csv(path.string()), ValidationError);
}

// --- model formulas ----------------------------------------------------------

TEST(ModelSpec, ParsesTableStyleSpec) {
  const std::vector<std::string> names{"1", "EI", "HIV", "DR"};
  const ModelSpec spec = ModelSpec::parse("lambda~1, nu~1, mu~1+EI", names);
  EXPECT_EQ(spec.cols[0], (std::vector<int>{0}));
  EXPECT_EQ(spec.cols[1], (std::vector<int>{0}));
  EXPECT_EQ(spec.cols[2], (std::vector<int>{0, 1}));
  EXPECT_EQ(spec.n_params(), 4);  // the best-model shape: 4 parameters
}

TEST(ModelSpec, SimpleNuHasExactlyOneParameter) {
  const std::vector<std::string> names{"1", "EI"};
  const ModelSpec spec = ModelSpec::parse("lambda~1+EI, nu~1, mu~1+EI", names);
  EXPECT_EQ(spec.cols[1].size(), 1u);
  EXPECT_EQ(spec.n_params(), 5);  // the "lineage only, simple nu" shape
}

TEST(ModelSpec, UnknownCovariateRejected) {
  const std::vector<std::string> names{"1", "EI"};
  try {
    ModelSpec::parse("mu~1+WRONG", names);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("WRONG"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("EI"), std::string::npos);
  }
}

TEST(ModelSpec, DesignBlocksFollowSpec) {
  std::vector<ReducedRow> rows{{"p1", 0.0, 1.0, 3, 3, 0, 2}, {"p2", 0.0, 1.0, 4, 4, 0, 3}};
  CovariateTable cov;
  cov.names = {"EI"};
  cov.rows.push_back({"p1", Eigen::VectorXd::Constant(1, 1.0)});
  cov.rows.push_back({"p2", Eigen::VectorXd::Constant(1, 0.0)});
  const PanelDataset data = validate_dataset(rows, &cov);
  const ModelSpec spec = ModelSpec::parse("mu~1+EI", data.covariate_names);
  const Design design = Design::from(data, spec);
  EXPECT_EQ(design.block(2).cols(), 2);
  EXPECT_EQ(design.block(0).cols(), 1);
  RegressionCoefficients beta = design.zero_beta();
  beta.beta_mu << std::log(2.0), std::log(3.0);
  EXPECT_NEAR(design.rates_for(0, beta).mu, 6.0, 1e-12);
  EXPECT_NEAR(design.rates_for(1, beta).mu, 2.0, 1e-12);
}
