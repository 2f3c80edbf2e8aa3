#ifndef BDS_DATASET_HPP
#define BDS_DATASET_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "bds/types.hpp"

namespace bds {

// Raw ingest rows; `line` feeds per-row diagnostics.
struct GenotypeRow {
  std::string patient_id;
  double time = 0;
  std::string site_id;
  std::size_t line = 0;
};

struct ReducedRow {
  std::string patient_id;
  double t_start = 0, t_end = 0;
  long a = 0, b = 0, c_new = 0;
  std::size_t line = 0;
};

struct CovariateTable {
  std::vector<std::string> names;  // columns after patient_id
  std::vector<std::pair<std::string, Eigen::VectorXd>> rows;

  const Eigen::VectorXd* find(const std::string& patient_id) const;
};

struct Patient {
  std::string id;
  Eigen::VectorXd z;  // leading all-ones intercept entry, then covariates
  std::vector<double> obs_times;
  std::vector<Genotype> genotypes;  // empty for reduced-form ingest
  std::vector<ReducedInterval> intervals;
};

struct PanelDataset {
  std::vector<Patient> patients;
  std::vector<std::string> covariate_names;  // "1" plus covariate columns

  long n_intervals() const;
  long n_observations() const;
  long n_changed_intervals() const;
  long max_count() const;  // largest per-type count anywhere in the data
};

// Validated dataset construction: monotone times, uniform covariate width,
// all reduced intervals computed and attached.
PanelDataset validate_dataset(const std::vector<GenotypeRow>& rows,
                              const CovariateTable* covariates);
PanelDataset validate_dataset(const std::vector<ReducedRow>& rows,
                              const CovariateTable* covariates);

std::vector<GenotypeRow> read_genotype_csv(const std::string& path);
std::vector<ReducedRow> read_reduced_csv(const std::string& path);
CovariateTable read_covariates_csv(const std::string& path);

void write_genotype_csv(const std::string& path, const PanelDataset& data);
void write_reduced_csv(const std::string& path, const PanelDataset& data);
void write_covariates_csv(const std::string& path, const PanelDataset& data);

}  // namespace bds

#endif
