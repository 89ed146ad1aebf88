// Acceptance suite: one PASS/FAIL line per criterion, followed by the parts
// that failed. Arguments restrict the run to the listed criteria.
// Exit status 0 iff every requested criterion passes.
#include "affinelab/verification.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

using namespace affinelab;

namespace {

void print_part(const CheckPart& p) {
  if (p.relation == "~rel")
    std::printf("         %-58s measured %.6g, target %.6g, relative tolerance %.3g\n", p.name.c_str(), p.measured,
                p.target, p.tolerance);
  else
    std::printf("         %-58s measured %.6g, required %s %.6g\n", p.name.c_str(), p.measured, p.relation.c_str(),
                p.target);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> criteria;
  for (int i = 1; i < argc; ++i) criteria.push_back(std::atoi(argv[i]));
  if (criteria.empty())
    for (int c = 1; c <= kCriterionCount; ++c) criteria.push_back(c);

  VerifyContext ctx;
  ctx.log = [](const std::string& line) {
    std::fprintf(stderr, "  ... %s\n", line.c_str());
  };
  const auto start = std::chrono::steady_clock::now();
  std::vector<Verdict> verdicts;
  try {
    verdicts = run_criteria(criteria, ctx);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }

  int failed = 0;
  for (const Verdict& v : verdicts) {
    const bool ok = v.passed();
    failed += ok ? 0 : 1;
    int judged = 0, bad = 0;
    for (const CheckPart& p : v.parts) {
      judged += p.status != CheckStatus::ReportOnly;
      bad += p.status == CheckStatus::Fail;
    }
    std::printf("[%s] criterion %2d  %-26s %d/%d parts pass\n", ok ? "PASS" : "FAIL", v.criterion, v.name.c_str(),
                judged - bad, judged);
    for (const CheckPart& p : v.parts)
      if (p.status == CheckStatus::Fail) print_part(p);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu criteria, %d failed, %.1f s\n", verdicts.size(), failed, seconds);
  return failed == 0 ? 0 : 1;
}
