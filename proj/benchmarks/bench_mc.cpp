// Timing harness for the replica kernels: single-thread reference against the
// OpenMP path, which must produce identical bits while scaling with cores.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "ifslr/engine.hpp"
#include "ifslr/moments.hpp"

using namespace ifslr;

namespace {

double seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main() {
  const auto ifs = make_two_map(0.5, 1.2);
  McOptions opts;
  opts.replicas = 2'000'000;
  opts.truncation = 200;
  opts.master_seed = 2026;

  auto first_moment = [](const PathView& p) { return p.x_n; };

  MCEstimate serial, parallel;
  const double t_serial =
      seconds([&] { serial = estimate_expectation_serial(ifs, first_moment, opts); });
  const double t_parallel =
      seconds([&] { parallel = estimate_expectation(ifs, first_moment, opts); });

  std::printf("replicas            %lld  (truncation %d)\n", opts.replicas, opts.truncation);
  std::printf("serial reference    %.3f s   mean %.9f\n", t_serial, serial.mean);
  std::printf("openmp (%d threads)  %.3f s   mean %.9f\n", omp_get_max_threads(), t_parallel,
              parallel.mean);
  std::printf("speedup             %.2fx\n", t_serial / t_parallel);
  std::printf("bit-identical       %s\n",
              serial.mean == parallel.mean && serial.std_error == parallel.std_error ? "yes"
                                                                                     : "NO");

  // derivative-weighted kernel
  McOptions dopts = opts;
  dopts.replicas = 1'000'000;
  dopts.deriv_order = 2;
  dopts.deriv_direction = {ParamDirection::Kind::Ratio, 0};
  auto weighted = [](const PathView& p) { return p.x_n * p.derivatives[0] + p.derivatives[1]; };
  MCEstimate ds, dp;
  const double t_ds = seconds([&] { ds = estimate_expectation_serial(ifs, weighted, dopts); });
  const double t_dp = seconds([&] { dp = estimate_expectation(ifs, weighted, dopts); });
  std::printf("derivative kernel   serial %.3f s, openmp %.3f s, speedup %.2fx, identical %s\n",
              t_ds, t_dp, t_ds / t_dp, ds.mean == dp.mean ? "yes" : "NO");

  const bool ok = serial.mean == parallel.mean && ds.mean == dp.mean;
  return ok ? 0 : 1;
}
