// Compares the OpenMP kernels against the serial reference implementation:
// dense matmul and batched equilibrium solves.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "idl/equilibrium.hpp"
#include "idl/matrix.hpp"
#include "idl/rng.hpp"

using namespace idl;

namespace {

double now() {
#ifdef _OPENMP
    return omp_get_wtime();
#else
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
#endif
}

void bench_matmul(std::size_t n, int reps) {
    RngStream rng(7, stream::data);
    const auto dist = DistributionSpec::uniform(-1.0, 1.0);
    const Matrix a = sample(dist, n, n, rng);
    const Matrix b = sample(dist, n, n, rng);

    double t0 = now();
    Matrix serial;
    for (int r = 0; r < reps; ++r) serial = ref::matmul(a, b);
    const double t_serial = (now() - t0) / reps;

    t0 = now();
    Matrix parallel;
    for (int r = 0; r < reps; ++r) parallel = matmul(a, b);
    const double t_parallel = (now() - t0) / reps;

    const bool match = serial == parallel;
    std::printf("matmul %4zu x %-4zu  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
                n, n, 1e3 * t_serial, 1e3 * t_parallel, t_serial / t_parallel,
                match ? "bitwise-equal" : "MISMATCH");
}

void bench_batch_forward(std::size_t n, std::size_t batch) {
    RngStream rng(11, stream::init);
    const ImplicitModel model = init_implicit(n, n, 1, rng);
    const Matrix inputs = sample(DistributionSpec::uniform(-1.0, 1.0), batch, n, rng);

    double t0 = now();
    std::vector<int> serial_iters(batch);
    for (std::size_t i = 0; i < batch; ++i)
        serial_iters[i] = solve_forward(model, inputs.row(i)).iterations;
    const double t_serial = now() - t0;

    t0 = now();
    std::vector<int> parallel_iters(batch);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch); ++i)
        parallel_iters[static_cast<std::size_t>(i)] =
            solve_forward(model, inputs.row(static_cast<std::size_t>(i))).iterations;
    const double t_parallel = now() - t0;

    const bool match = serial_iters == parallel_iters;
    std::printf("batch solve n=%-3zu batch=%-5zu  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
                n, batch, 1e3 * t_serial, 1e3 * t_parallel, t_serial / t_parallel,
                match ? "equal" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both paths run serially\n");
#endif
    bench_matmul(128, 10);
    bench_matmul(256, 5);
    bench_matmul(512, 2);
    bench_batch_forward(32, 2000);
    bench_batch_forward(128, 500);
    return 0;
}
