#include <sstream>

#include <gtest/gtest.h>

#include "boundshift/io.hpp"
#include "support.hpp"

using namespace boundshift;
using testing_support::scratch_dir;

TEST(Io, FormatDoubleRoundTrips) {
    for (double v : {0.1, -3.25, 1e-300, 123456789.123, 2.0 / 3.0}) EXPECT_EQ(std::stod(io::format_double(v)), v);
    EXPECT_EQ(io::format_double(1.0), "1");
    EXPECT_EQ(io::format_double(std::nan("")), "nan");
}

TEST(Io, MonthlyClimateCsv) {
    std::istringstream in(
        "year,month,longitude,latitude,temperature_k,precip_rate_kg_m2_s\n"
        "1983,1,10.5,12.25,300,1e-5\n"
        "1984,2,10.5,12.25,299.5,0\n");
    const io::ClimateInput c = io::read_climate_csv(in);
    EXPECT_EQ(c.kind, io::ClimateCsvKind::Monthly);
    ASSERT_EQ(c.monthly.size(), 2u);
    EXPECT_EQ(c.monthly[0].latitude, 12.25);
    EXPECT_EQ(c.monthly[1].month, 2);
    EXPECT_EQ(c.years(), (std::vector<int>{1983, 1984}));
}

TEST(Io, AnnualClimateCsv) {
    std::istringstream in("year,longitude,latitude,t_c,p_mm,pw_pct\n1990,1,2,25,30,30\n");
    const io::ClimateInput c = io::read_climate_csv(in);
    EXPECT_EQ(c.kind, io::ClimateCsvKind::Annual);
    ASSERT_EQ(c.annual.size(), 1u);
    EXPECT_EQ(c.annual[0].first, 1990);
    EXPECT_EQ(c.annual[0].second.p_mm, 30.0);
}

TEST(Io, SchemaErrorsReportLineNumbers) {
    std::istringstream bad_number(
        "year,month,longitude,latitude,temperature_k,precip_rate_kg_m2_s\n"
        "1983,1,10.5,12.25,300,1e-5\n"
        "1983,2,abc,12.25,300,1e-5\n");
    try {
        io::read_climate_csv(bad_number);
        FAIL() << "expected SchemaError";
    } catch (const io::SchemaError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream short_row("year,longitude,latitude,t_c,p_mm,pw_pct\n1990,1,2\n");
    try {
        io::read_climate_csv(short_row);
        FAIL() << "expected SchemaError";
    } catch (const io::SchemaError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream bad_month(
        "year,month,longitude,latitude,temperature_k,precip_rate_kg_m2_s\n1983,13,0,0,300,0\n");
    EXPECT_THROW(io::read_climate_csv(bad_month), io::SchemaError);
    std::istringstream bad_header("a,b,c\n1,2,3\n");
    EXPECT_THROW(io::read_climate_csv(bad_header), io::SchemaError);
    std::istringstream empty("");
    EXPECT_THROW(io::read_climate_csv(empty), io::SchemaError);
}

TEST(Io, MissingFileIsIoError) {
    EXPECT_THROW(io::read_climate_csv(std::filesystem::path("/nonexistent/file.csv")), io::IoError);
}

TEST(Io, ClassGridRoundTrip) {
    const auto dir = scratch_dir("io_grid");
    const ClassGrid g = testing_support::make_grid(
        3, 4, [](int r, int c) { return static_cast<DryClass>((r + c) % 4); }, -10.0, 5.0, 0.25, 1977);
    io::write_class_grid(g, dir / "g.csv", dir / "g.json");
    const ClassGrid back = io::read_class_grid(dir / "g.json");
    EXPECT_EQ(back.year, 1977);
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_TRUE(back.spec.aligned_with(g.spec));
}

TEST(Io, PointsRoundTrip) {
    BoundaryPointSet a;
    a.year = 1983;
    a.interface = BoundaryInterface::Secondary;
    a.points = {{-5.5, 14.25}, {0.1, 13.0}};
    BoundaryPointSet b;
    b.year = 1984;
    b.points = {{2.0, 16.0}};
    std::stringstream buf;
    io::write_points_csv({a, b}, buf);
    const auto back = io::read_points_csv(buf);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].year, 1983);
    EXPECT_EQ(back[0].interface, BoundaryInterface::Secondary);
    EXPECT_EQ(back[0].points, a.points);
    EXPECT_EQ(back[1].points, b.points);
}

TEST(Io, TrainingCsvAcceptsBothLayouts) {
    std::istringstream plain("year,longitude,latitude\n1960,1,2\n1961,3,4\n");
    const auto t = io::read_training_csv(plain);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[1].latitude, 4.0);
    std::istringstream pts("year,interface,longitude,latitude\n1960,primary,1,2\n");
    EXPECT_EQ(io::read_training_csv(pts).size(), 1u);
    std::istringstream bad("lon,lat\n1,2\n");
    EXPECT_THROW(io::read_training_csv(bad), io::SchemaError);
}

TEST(Io, ModelRoundTripPreservesPredictions) {
    TemporalDesignConfig t;
    t.periods = {3.0, 5.0};
    t.harmonics = {1};
    t.center_year = 1975.5;
    std::vector<TrainingRecord> recs;
    for (int i = 0; i < 30; ++i) recs.push_back({1970.0 + i % 4, double(i), 15.0 + std::sin(i / 4.0)});
    const TrainingSet s = TrainingSet::build(recs, t);
    const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(30, -4, -2);
    HetGpModel m = assemble_model(s, t, estimate_beta(s), 5.0, {0.3, 8.0}, -3.0, z);
    m.converged = false;
    m.warnings = {"note"};
    const io::json j = io::to_json(m);
    const HetGpModel back = io::model_from_json(io::json::parse(j.dump()));
    EXPECT_EQ(back.converged, false);
    EXPECT_EQ(back.warnings, m.warnings);
    EXPECT_EQ(back.temporal.periods, t.periods);
    const Eigen::VectorXd grid = linspace(0, 29, 17);
    const BasisVector b = basis_at_year(t, 1972);
    const auto p0 = predict(m, grid, b, PredictiveFlavor::Noisy);
    const auto p1 = predict(back, grid, b, PredictiveFlavor::Noisy);
    EXPECT_LT((p0.mean - p1.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p0.cov - p1.cov).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_THROW(io::model_from_json(io::json{{"format", "other"}}), io::SchemaError);
}

TEST(Io, TemporalConfigJson) {
    TemporalDesignConfig t;
    t.periods = {4.0};
    t.harmonics = {1, 2};
    t.center_year = 1999.0;
    t.intercept = true;
    const TemporalDesignConfig back = io::temporal_config_from_json(io::to_json(t));
    EXPECT_EQ(back.periods, t.periods);
    EXPECT_EQ(back.harmonics, t.harmonics);
    EXPECT_EQ(back.center_year, t.center_year);
    EXPECT_TRUE(back.intercept);
}

TEST(Io, TraceCsvAndResultJson) {
    Eigen::MatrixXd c(3, 4);
    c << 1, 2, 3, 4, 0, 1, 0, 1, 2, 2, 3, 3;
    const NullEnsemble e = make_null_ensemble(Eigen::Vector3d(0, 1, 2), c);
    const EnvelopeTestResult r = run_envelope_test(Eigen::Vector3d(10, 0.5, 2.5), e, 0.25);
    std::ostringstream csv;
    io::write_trace_csv(r, csv);
    std::istringstream lines(csv.str());
    std::string header, row;
    std::getline(lines, header);
    EXPECT_EQ(header, "x,t_obs,mu_en,lower,upper,exceed");
    int n = 0;
    while (std::getline(lines, row)) ++n;
    EXPECT_EQ(n, 3);
    const io::json j = io::to_json(r);
    EXPECT_EQ(j.at("p_value").get<double>(), r.p_value);
    EXPECT_EQ(j.at("r_sim").size(), 4u);
    std::ostringstream svg;
    io::write_trace_svg(r, svg, "trace");
    EXPECT_NE(svg.str().find("<svg"), std::string::npos);
}

TEST(Io, StudyCsvLayout) {
    StudyReport a;
    a.settings = {200, 500, 2500, 0.05};
    a.rejection_rate = 0.048;
    std::ostringstream out;
    io::write_study_csv({a}, out, false);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "setting,rejection_rate,n,N_sim,M,alpha");
    std::ostringstream pw;
    a.perturbation = 3.5;
    io::write_study_csv({a}, pw, true);
    EXPECT_NE(pw.str().find("perturbation"), std::string::npos);
    EXPECT_NE(pw.str().find("3.5"), std::string::npos);
}
