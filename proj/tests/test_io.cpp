#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vinestep/io.hpp"

using namespace vinestep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / ("vinestep_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Io, FormatDoubleIsLossless) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 1e-10}) EXPECT_EQ(std::stod(io::format_double(x)), x);
  EXPECT_EQ(io::format_double(std::nan("")), "nan");
  EXPECT_EQ(io::format_double(2.0), "2");
}

TEST(Io, MatrixRoundTrip) {
  const auto m = VineModel::from_theta_model(RVineStructure::dvine(4), Family::GumbelSigned, ThetaModelSpec::parse("harmonic"));
  const SampleMatrix U = simulate(m, 50, 1);
  const fs::path f = temp_dir() / "u.csv";
  io::write_matrix_csv(f.string(), U);
  EXPECT_TRUE(io::read_matrix_csv(f.string()) == U);
  std::ifstream in(f);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 3);  // headerless, 4 columns
}

TEST(Io, MatrixReadErrors) {
  const fs::path f = temp_dir() / "bad.csv";
  std::ofstream(f) << "0.1,0.2\n0.3\n";
  EXPECT_THROW(io::read_matrix_csv(f.string()), std::invalid_argument);
  std::ofstream(f) << "0.1,abc\n";
  EXPECT_THROW(io::read_matrix_csv(f.string()), std::invalid_argument);
  EXPECT_ANY_THROW(io::read_matrix_csv((temp_dir() / "missing.csv").string()));
}

TEST(Io, StructureRoundTrip) {
  for (const auto& s : {RVineStructure::cvine(5), RVineStructure::dvine(6, 2)}) {
    const auto j = io::structure_to_json(s);
    EXPECT_EQ(j.at("d"), s.d());
    EXPECT_EQ(j.at("trunc"), s.trunc());
    EXPECT_EQ(j.at("trees").size(), static_cast<std::size_t>(s.trunc()));
    const auto back = io::structure_from_json(j);
    EXPECT_EQ(back.kind(), s.kind());
    for (int t = 1; t <= s.trunc(); ++t)
      for (std::size_t i = 0; i < s.tree(t).size(); ++i) EXPECT_EQ(back.tree(t)[i].label(), s.tree(t)[i].label());
  }
  const auto j = io::structure_to_json(RVineStructure::dvine(3));
  EXPECT_EQ(j["trees"][1][0]["a"], 1);  // 1-based ids
  EXPECT_EQ(j["trees"][1][0]["D"][0], 2);
  auto broken = j;
  broken["trees"][1][0]["D"][0] = 3;
  EXPECT_THROW(io::structure_from_json(broken), std::invalid_argument);
}

TEST(Io, ModelRoundTrip) {
  const VineModel m(RVineStructure::cvine(3), {PairCopula::gaussian(0.1 / 3), PairCopula::student(-0.4, 7.25),
                                                PairCopula::gumbel(-1.0 / 7)});
  const auto back = io::model_from_json(io::model_to_json(m));
  EXPECT_EQ(back.theta(), m.theta());
  EXPECT_EQ(back.families(), m.families());
}

TEST(Io, FitOutputs) {
  const auto m = VineModel::from_theta_model(RVineStructure::dvine(3), Family::Gaussian, ThetaModelSpec::parse("harmonic"));
  const FitResult fit = stepwise_fit(m.structure(), Family::Gaussian, simulate(m, 500, 2));
  const auto j = io::fit_to_json(fit);
  EXPECT_EQ(j.at("margins"), "known");
  EXPECT_EQ(io::model_from_json(j).theta(), fit.theta_hat);
  const fs::path f = temp_dir() / "fit.csv";
  io::write_fit_csv(f.string(), fit);
  std::ifstream in(f);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 1 + 3);
}

TEST(Io, EmpiricalIJFiles) {
  const auto m = VineModel::from_theta(RVineStructure::dvine(3), Family::Gaussian, std::vector<double>{0.2, 0.1, 0.0});
  const EmpiricalIJ ij = empirical_IJ(m, 200, 3);
  const fs::path prefix = temp_dir() / "ij";
  io::write_empirical_ij(prefix.string(), ij);
  const SampleMatrix I = io::read_matrix_csv(prefix.string() + "_I.csv");
  const SampleMatrix J = io::read_matrix_csv(prefix.string() + "_J.csv");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(I(r, c), ij.I_hat(r, c));
      EXPECT_EQ(J(r, c), ij.J_hat(r, c));
    }
  const auto side = io::read_json(prefix.string() + ".json");
  EXPECT_EQ(side.at("N"), 200);
  EXPECT_EQ(side.at("seed"), 3);
  EXPECT_EQ(side.at("theta").size(), 3u);
}

TEST(Io, StudyCsvRoundTrip) {
  StudyConfig c;
  c.family = Family::GumbelSigned;
  c.theta_model = ThetaModelSpec::parse("sqrt-slow");
  c.d_list = {3};
  c.n_list = {100};
  c.replications = 2;
  c.timing = false;
  auto rows = run_study(c);
  rows.push_back(rows.back());
  rows.back().nonconverged = -1;
  rows.back().maxnorm_stat = rows.back().sum_stat = std::nan("");
  const fs::path f = temp_dir() / "study.csv";
  {
    std::ofstream out(f);
    io::write_study_csv(out, rows);
  }
  std::ifstream in(f);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, io::kStudyHeader);
  EXPECT_EQ(header,
            "study_id,structure,family,theta_model,margins_mode,trunc,d,n,rep,seed,maxnorm_stat,sum_stat,nonconverged,wall_ms");
  const auto back = io::read_study_csv(f.string());
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(io::study_row_csv(back[i]), io::study_row_csv(rows[i]));
    EXPECT_EQ(back[i].seed, rows[i].seed);
  }
  EXPECT_TRUE(std::isnan(back.back().maxnorm_stat));
  std::ofstream(f) << "wrong,header\n";
  EXPECT_THROW(io::read_study_csv(f.string()), std::invalid_argument);
}

TEST(Io, OtherHeaders) {
  EXPECT_STREQ(io::kValidateHeader, "d,p,theta_model,alpha_rule,eps,K,N,seed,a3_hat,mn2_hat,dn_hat");
  EXPECT_STREQ(io::kRegimeHeader, "regime,d,n_target,mean_maxnorm_interp");
}
