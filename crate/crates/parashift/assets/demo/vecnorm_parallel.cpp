#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

int main(int argc, char** argv) {
    const long n = argc > 1 ? std::atol(argv[1]) : 1000000;
    if (n <= 0) {
        std::fprintf(stderr, "n must be positive\n");
        return 1;
    }
    std::vector<double> v(n);
#pragma omp parallel for
    for (long i = 0; i < n; ++i) {
        v[i] = 0.5 + 0.5 * std::cos(0.001 * static_cast<double>(i));
    }

    const auto start = std::chrono::steady_clock::now();
    double sum = 0.0;
#pragma omp parallel for reduction(+ : sum)
    for (long i = 0; i < n; ++i) {
        sum += v[i] * v[i];
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    std::printf("n %ld\n", n);
    std::printf("norm %.6f\n", std::sqrt(sum));
    std::printf("mean %.6f\n", sum / static_cast<double>(n));
    std::printf("Total time: %.6f s\n", elapsed.count());
    return 0;
}
