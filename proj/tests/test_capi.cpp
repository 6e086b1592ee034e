// Exercises the public C API surface end to end: tables, synth presets,
// problems with overrides, fitting, model files, imputation, certification,
// cross-validation, and regularization paths.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "glrm/glrm.h"

namespace {

std::string tmp(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "glrm_capi";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

struct Fitted {
  glrm_table* table = nullptr;
  glrm_problem* prob = nullptr;
  glrm_model* model = nullptr;
  glrm_report* report = nullptr;
  ~Fitted() {
    glrm_report_free(report);
    glrm_model_free(model);
    glrm_problem_free(prob);
    glrm_table_free(table);
  }
};

void fit_qrpca(Fitted& out, double gamma, const char* init = "svd") {
  REQUIRE(glrm_table_synth("qrpca", 3, -1.0, &out.table, nullptr) == GLRM_OK);
  REQUIRE(glrm_problem_create(out.table, 3, gamma, 0, 0, &out.prob) == GLRM_OK);
  for (int j = 0; j < 20; ++j)
    REQUIRE(glrm_problem_set_loss(out.prob, j, "quadratic") == GLRM_OK);
  glrm_fit_opts opts;
  glrm_fit_opts_default(&opts);
  opts.max_iters = 2000;
  opts.rel_tol = 1e-10;
  opts.threads = 1;
  REQUIRE(glrm_fit(out.prob, init, &opts, &out.model, &out.report) == GLRM_OK);
}

}  // namespace

TEST_CASE("csv io via the C API") {
  std::string csv = tmp("t.csv");
  write_file(csv, "a,b\n1.5,yes\nNA,no\n2.5,yes\n");
  glrm_table* t = nullptr;
  REQUIRE(glrm_table_read_csv(csv.c_str(), "NA", nullptr, &t) == GLRM_OK);
  int m = 0, n = 0;
  long obs = 0;
  REQUIRE(glrm_table_dims(t, &m, &n, &obs) == GLRM_OK);
  CHECK(m == 3);
  CHECK(n == 2);
  CHECK(obs == 5);
  char kind[32];
  REQUIRE(glrm_table_kind(t, 1, kind, sizeof kind) == GLRM_OK);
  CHECK(std::string(kind) == "boolean");

  std::string out = tmp("t2.csv");
  REQUIRE(glrm_table_write_csv(t, out.c_str(), "NA") == GLRM_OK);
  glrm_table* t2 = nullptr;
  REQUIRE(glrm_table_read_csv(out.c_str(), "NA", nullptr, &t2) == GLRM_OK);
  long obs2 = 0;
  glrm_table_dims(t2, nullptr, nullptr, &obs2);
  CHECK(obs2 == 5);
  glrm_table_free(t2);
  glrm_table_free(t);

  glrm_table* bad = nullptr;
  CHECK(glrm_table_read_csv(tmp("missing_file.csv").c_str(), "NA", nullptr, &bad) != GLRM_OK);
  CHECK(std::string(glrm_last_error()).size() > 0);
}

TEST_CASE("kind hints flow through the C API") {
  std::string csv = tmp("hint.csv");
  write_file(csv, "lvl\n1\n2\n5\n");
  glrm_table* t = nullptr;
  REQUIRE(glrm_table_read_csv(csv.c_str(), "NA", "1=ordinal:6", &t) == GLRM_OK);
  char kind[32];
  glrm_table_kind(t, 0, kind, sizeof kind);
  CHECK(std::string(kind) == "ordinal(6)");
  glrm_table_free(t);
}

TEST_CASE("fit, save, load, impute, objective round trip") {
  Fitted f;
  fit_qrpca(f, 0.5);

  long rows = 0;
  REQUIRE(glrm_report_rows(f.report, &rows) == GLRM_OK);
  CHECK(rows >= 2);
  double first = 0, last = 0;
  glrm_report_objective(f.report, 0, &first);
  glrm_report_objective(f.report, rows - 1, &last);
  CHECK(last <= first);
  char term[32];
  glrm_report_termination(f.report, term, sizeof term);
  CHECK((std::string(term) == "converged" || std::string(term) == "max_iters"));

  std::string mpath = tmp("m.glrm");
  REQUIRE(glrm_model_save(f.model, mpath.c_str()) == GLRM_OK);
  glrm_model* loaded = nullptr;
  REQUIRE(glrm_model_load(mpath.c_str(), &loaded) == GLRM_OK);
  int k = 0;
  glrm_model_dims(loaded, nullptr, nullptr, &k);
  CHECK(k == 3);

  double obj1 = 0, obj2 = 0;
  REQUIRE(glrm_model_objective(f.model, f.table, &obj1) == GLRM_OK);
  REQUIRE(glrm_model_objective(loaded, f.table, &obj2) == GLRM_OK);
  CHECK(obj1 == obj2);
  CHECK(obj2 == last);

  glrm_table* imputed = nullptr;
  REQUIRE(glrm_model_impute(loaded, f.table, 1, &imputed) == GLRM_OK);
  long obs = 0;
  int m = 0, n = 0;
  glrm_table_dims(imputed, &m, &n, &obs);
  CHECK(obs == static_cast<long>(m) * n);  // fully observed output
  glrm_table_free(imputed);
  glrm_model_free(loaded);

  glrm_model* broken = nullptr;
  CHECK(glrm_model_load(tmp("nope.glrm").c_str(), &broken) != GLRM_OK);
}

TEST_CASE("histories are reproducible for a fixed seed") {
  for (int round = 0; round < 2; ++round) {
    Fitted f;
    fit_qrpca(f, 0.5, "random");
    std::string h = tmp("hist" + std::to_string(round) + ".tsv");
    REQUIRE(glrm_report_write(f.report, h.c_str(), 0) == GLRM_OK);
  }
  std::ifstream a(tmp("hist0.tsv")), b(tmp("hist1.tsv"));
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
}

TEST_CASE("certification verdicts through the C API") {
  Fitted f;
  fit_qrpca(f, 7.75);  // between sigma_4 and sigma_3 of this seed's table
  double s = 0;
  int verdict = -5;
  REQUIRE(glrm_model_certify(f.model, f.table, &s, &verdict) == GLRM_OK);
  CHECK(verdict == 1);
  CHECK(s <= 1.0 + 1e-8);

  Fitted weak;
  fit_qrpca(weak, 0.01);  // rank above k: cannot certify
  REQUIRE(glrm_model_certify(weak.model, weak.table, &s, &verdict) == GLRM_OK);
  CHECK(verdict == 0);
  CHECK(s > 1.0);
}

TEST_CASE("loss overrides are validated and recorded") {
  std::string csv = tmp("ov.csv");
  write_file(csv, "x,y\n1.5,1\n0.5,-1\n2.5,1\n-0.5,-1\n");
  glrm_table* t = nullptr;
  REQUIRE(glrm_table_read_csv(csv.c_str(), "NA", nullptr, &t) == GLRM_OK);
  glrm_problem* p = nullptr;
  REQUIRE(glrm_problem_create(t, 1, 0.1, 1, 1, &p) == GLRM_OK);
  char name[48];
  glrm_problem_loss_name(p, 0, name, sizeof name);
  CHECK(std::string(name) == "huber");  // real columns default to huber
  glrm_problem_loss_name(p, 1, name, sizeof name);
  CHECK(std::string(name) == "hinge");
  REQUIRE(glrm_problem_set_loss(p, 0, "quadratic") == GLRM_OK);
  glrm_problem_loss_name(p, 0, name, sizeof name);
  CHECK(std::string(name) == "quadratic");
  CHECK(glrm_problem_set_loss(p, 1, "kl") != GLRM_OK);  // kl cannot take booleans

  // fit, save, and confirm the metadata carries the override
  glrm_fit_opts opts;
  glrm_fit_opts_default(&opts);
  opts.max_iters = 30;
  glrm_model* mdl = nullptr;
  REQUIRE(glrm_fit(p, "random", &opts, &mdl, nullptr) == GLRM_OK);
  std::string mpath = tmp("ov.glrm");
  REQUIRE(glrm_model_save(mdl, mpath.c_str()) == GLRM_OK);
  std::ifstream in(mpath);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body.find("quadratic") != std::string::npos);
  CHECK(body.find("hinge") != std::string::npos);
  glrm_model_free(mdl);
  glrm_problem_free(p);
  glrm_table_free(t);
}

TEST_CASE("cross-validation and path reports via the C API") {
  glrm_table* t = nullptr;
  REQUIRE(glrm_table_synth("cv", 21, 0.3, &t, nullptr) == GLRM_OK);
  glrm_problem* p = nullptr;
  REQUIRE(glrm_problem_create(t, 1, 0.0, 0, 0, &p) == GLRM_OK);
  glrm_fit_opts opts;
  glrm_fit_opts_default(&opts);
  opts.max_iters = 50;
  opts.threads = 2;

  std::string cv_out = tmp("cv.tsv");
  int best_k = -1;
  REQUIRE(glrm_cross_validate(p, "1,2,3,4", "0", 0.1, 1, 9, &opts, cv_out.c_str(), &best_k) ==
          GLRM_OK);
  CHECK(best_k == 3);
  CHECK(std::filesystem::exists(cv_out));

  std::string path_out = tmp("path.tsv");
  REQUIRE(glrm_reg_path(p, "3,1,0.3", 0.1, 11, &opts, path_out.c_str()) == GLRM_OK);
  std::ifstream in(path_out);
  std::string head;
  std::getline(in, head);
  CHECK(head.find("gamma") == 0);
  int lines = 0;
  std::string row;
  while (std::getline(in, row)) ++lines;
  CHECK(lines == 3);

  // non-descending gammas are rejected
  CHECK(glrm_reg_path(p, "1,2", 0.1, 11, &opts, path_out.c_str()) != GLRM_OK);
  glrm_problem_free(p);
  glrm_table_free(t);
}

TEST_CASE("model kind hints round-trip through csv reads") {
  std::string csv = tmp("kh.csv");
  // the lvl column would infer ordinal(3); the model must pin it back
  write_file(csv, "x,lvl\n1.5,1\n0.25,3\n-2.5,2\n0.75,1\n");
  glrm_table* t = nullptr;
  REQUIRE(glrm_table_read_csv(csv.c_str(), "NA", "2=ordinal:5", &t) == GLRM_OK);
  glrm_problem* p = nullptr;
  REQUIRE(glrm_problem_create(t, 1, 0.1, 0, 0, &p) == GLRM_OK);
  glrm_fit_opts opts;
  glrm_fit_opts_default(&opts);
  opts.max_iters = 20;
  glrm_model* mdl = nullptr;
  REQUIRE(glrm_fit(p, "random", &opts, &mdl, nullptr) == GLRM_OK);

  char hints[256];
  REQUIRE(glrm_model_kind_hints(mdl, hints, sizeof hints) == GLRM_OK);
  CHECK(std::string(hints) == "1=real,2=ordinal:5");
  glrm_table* t2 = nullptr;
  REQUIRE(glrm_table_read_csv(csv.c_str(), "NA", hints, &t2) == GLRM_OK);
  char kind[32];
  glrm_table_kind(t2, 1, kind, sizeof kind);
  CHECK(std::string(kind) == "ordinal(5)");
  // the re-read table is accepted by the model
  double obj = 0;
  CHECK(glrm_model_objective(mdl, t2, &obj) == GLRM_OK);

  char tiny[4];
  CHECK(glrm_model_kind_hints(mdl, tiny, sizeof tiny) != GLRM_OK);

  glrm_table_free(t2);
  glrm_model_free(mdl);
  glrm_problem_free(p);
  glrm_table_free(t);
}

TEST_CASE("synth presets expose observed and full tables") {
  glrm_table* obs = nullptr;
  glrm_table* full = nullptr;
  REQUIRE(glrm_table_synth("censored", 5, 0.1, &obs, &full) == GLRM_OK);
  int m = 0, n = 0;
  long nobs_obs = 0, nobs_full = 0;
  glrm_table_dims(obs, &m, &n, &nobs_obs);
  glrm_table_dims(full, nullptr, nullptr, &nobs_full);
  CHECK(m == 300);
  CHECK(n == 300);
  CHECK(nobs_full == 90000);
  CHECK(nobs_obs < nobs_full / 10);
  glrm_table_free(obs);
  glrm_table_free(full);
  glrm_table* bad = nullptr;
  CHECK(glrm_table_synth("nope", 1, -1, &bad, nullptr) != GLRM_OK);
}
