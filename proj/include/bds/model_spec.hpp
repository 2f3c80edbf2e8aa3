#ifndef BDS_MODEL_SPEC_HPP
#define BDS_MODEL_SPEC_HPP

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "bds/dataset.hpp"
#include "bds/types.hpp"

namespace bds {

// Three coefficient blocks over (subsets of) the covariate columns.
struct RegressionCoefficients {
  Eigen::VectorXd beta_lambda, beta_nu, beta_mu;

  int n_params() const {
    return static_cast<int>(beta_lambda.size() + beta_nu.size() + beta_mu.size());
  }
  Eigen::VectorXd flat() const;
  const Eigen::VectorXd& block(int rate) const;
  Eigen::VectorXd& block(int rate);
};

// Covariate-to-rate map with the full covariate vector (intercept first):
// log lambda = beta_lambda . z, and likewise for nu, mu.
RateTriple rates_from_covariates(const RegressionCoefficients& beta,
                                 const Eigen::VectorXd& z);

// Which covariate columns drive which rate, e.g. "lambda~1+EI, nu~1, mu~1+EI".
// "1" is the intercept column; names resolve against the covariates header.
struct ModelSpec {
  std::array<std::vector<int>, 3> cols;  // lambda, nu, mu
  std::string text;

  static ModelSpec parse(const std::string& text,
                         const std::vector<std::string>& covariate_names);
  static ModelSpec intercept_only();
  static ModelSpec full(int n_cols);
  int n_params() const;
  std::string block_text(int rate) const;
};

// Per-dataset design: full covariate matrix plus the model spec.
struct Design {
  Eigen::MatrixXd Z;  // n_patients x n_cols, column 0 all ones
  ModelSpec spec;

  static Design from(const PanelDataset& data, const ModelSpec& spec);
  Eigen::MatrixXd block(int rate) const;  // design submatrix for one rate
  RegressionCoefficients zero_beta() const;
  RateTriple rates_for(long patient, const RegressionCoefficients& beta) const;
};

RegressionCoefficients unflatten(const ModelSpec& spec, const Eigen::VectorXd& v);

}  // namespace bds

#endif
