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
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (long i = 0; i < n; ++i) {
        a[i] = 1.5 + std::sin(0.0005 * static_cast<double>(i));
        b[i] = 1.0 / (1.0 + 0.001 * static_cast<double>(i));
    }

    const auto start = std::chrono::steady_clock::now();
    double dot = 0.0;
    for (long i = 0; i < n; ++i) {
        dot += a[i] * b[i];
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    std::printf("n %ld\n", n);
    std::printf("dot %.6f\n", dot);
    std::printf("scaled %.6f\n", dot / static_cast<double>(n));
    std::printf("Total time: %.6f s\n", elapsed.count());
    return 0;
}
