#pragma once
// File formats: counts/covariates/neighbours CSVs, Bhattacharyya weights
// from patient samples, covariate standardization, and posterior-draw
// persistence with bit-exact round trips.

#include <string>
#include <vector>

#include "cmsnb/draws.hpp"
#include "cmsnb/types.hpp"

namespace cmsnb {

// counts.csv: area_id,week,count — every area must cover the same
// consecutive week range.  covariates.csv (optional): long form
// area_id,week,name,value with every (area, week, name) cell present.
// neighbors.csv (optional): from_area,to_area,weight meaning `from`
// influences `to`.  Errors carry file names and line numbers.
PanelData load_panel(const std::string& counts_path,
                     const std::string& covariates_path = "",
                     const std::string& neighbors_path = "");

// which loaded covariate columns enter x (emissions) and which z
// (transitions); by default every column serves both
void split_covariates(PanelData& data, const std::vector<std::string>& x_cols,
                      const std::vector<std::string>& z_cols);

// Center and scale every x and z column in place (pooled mean, sd with
// ddof 1); the transforms land in the given vectors for reporting on the
// original units.  Errors on constant columns.
void standardize_covariates(PanelData& data, std::vector<double>& x_mean,
                            std::vector<double>& x_sd,
                            std::vector<double>& z_mean,
                            std::vector<double>& z_sd);

// overlap of two discrete distributions, sum of sqrt(p*q)
double bhattacharyya_weight(const std::vector<double>& p,
                            const std::vector<double>& q);

// patients.csv: area_id,neighborhood_id,n.  Weights between all area pairs
// from the normalized neighbourhood profiles; each area keeps its k largest
// (ties broken toward the smaller area id, in load order).
struct WeightTable {
  std::vector<std::string> area_ids;
  std::vector<std::vector<PanelData::Edge>> in_nbrs;
};
WeightTable neighbor_weights_from_patients(const std::string& patients_path,
                                           int k = 5);

// install a weight table into a panel (ids matched by label)
void apply_weights(PanelData& data, const WeightTable& wt);

// write a neighbours CSV (from_area,to_area,weight)
void save_neighbors(const std::string& path, const WeightTable& wt);

// ---- posterior draw persistence ----------------------------------------------

// Writes meta.txt, params_chain<c>.csv, states_chain<c>.bin and (when online
// accumulation ran) pred_chain<c>.csv under `dir`.  All floating-point text
// uses %.17g, so load_draws(persist_draws(d)) reproduces every matrix bit
// for bit.  Writes are atomic (temp file + rename).
void persist_draws(const PosteriorDraws& draws, const std::string& dir);
PosteriorDraws load_draws(const std::string& dir);

// shared CSV helpers
void write_text_atomic(const std::string& path, const std::string& content);
std::string format_g17(double v);

}  // namespace cmsnb
