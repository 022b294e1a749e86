#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdwb/experiments.hpp"
#include "sdwb/fields.hpp"
#include "sdwb/geometry.hpp"
#include "sdwb/inference.hpp"

namespace sdwb {

using json = nlohmann::json;

// Doubles are rendered with 17 significant digits everywhere, so files
// round-trip exactly and repeated runs are byte-identical.
std::string format_double(double v);

// ---- site and field CSV ----------------------------------------------------

// Header: site_id,x1,...,xd
void write_sites_csv(const std::string& path, const SiteSet& s);
SiteSet read_sites_csv(const std::string& path, double lambda_n);

// Wide form, header row of component indices: site_id,1,...,p
void write_field_csv(const std::string& path, const FieldSample& y);
Eigen::MatrixXd read_field_csv(const std::string& path);

// Long form: site_id,j,value
void write_field_csv_long(const std::string& path, const FieldSample& y);

void write_draws_csv(const std::string& path, const BootstrapDraws& draws);

// ---- inference results ------------------------------------------------------

// Header: j,lower,estimate,upper (1-based coordinates)
std::string joint_ci_csv(const JointCI& ci);

// Keys: steps[], rejected[], segments[]; 1-based time indices.
json stepdown_to_json(const StepdownResult& r);

// ---- study tables -----------------------------------------------------------

std::string coverage_table_csv(const CoverageTable& table);
std::string fwer_table_csv(const std::vector<FwerRow>& rows);
std::string power_table_csv(const std::vector<PowerRow>& rows);
std::string variance_table_csv(const std::vector<VarianceRow>& rows);

// ---- spatio-temporal panels -------------------------------------------------

struct Station {
  std::string id;
  Eigen::Vector2d coords;
};

struct SpatioTemporalPanel {
  std::vector<Station> stations;
  std::vector<double> times;   // strictly increasing
  Eigen::MatrixXd values;      // n stations x p times, complete
  std::vector<std::string> dropped;  // stations excluded by the completeness rule
};

enum class Transform { None, Log1p };

Transform transform_from_name(const std::string& name);
std::string transform_name(Transform t);

// Long-form CSV station_id,x,y,t,value. Stations with gaps in the selected
// window are dropped and reported; log1p rejects negative values listing the
// offending file rows.
SpatioTemporalPanel ingest_panel(const std::string& path,
                                 std::optional<std::pair<double, double>> window,
                                 Transform transform);

// Row i = the station-i time series; coordinates carried over with the
// caller-supplied lambda_n as the region scale.
FieldSample panel_to_field(const SpatioTemporalPanel& panel, double lambda_n);

// ---- JSON specs -------------------------------------------------------------

json design_to_json(const SamplingDesign& design);
SamplingDesign design_from_json(const json& j);

json model_to_json(const FieldModel& model);
FieldModel model_from_json(const json& j);

json study_to_json(const StudyConfig& cfg);
StudyConfig study_from_json(const json& j);

// Flat key/value record of one CLI invocation; everything needed to
// reproduce the run. Round-trips losslessly through its JSON rendering.
struct RunConfig {
  std::string command;
  json params;  // flat object of scalar flag values

  bool operator==(const RunConfig& other) const = default;
};

json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sdwb
