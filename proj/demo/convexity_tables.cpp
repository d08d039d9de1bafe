// Prints P(X > K | N) / P(X > K | 0) for a constant error rate.

#include <cstdio>

#include "tailmix/mixture_stats.hpp"

int main() {
  for (double a : {0.01, 0.1}) {
    std::printf("a = %g\n%4s %14s %14s %14s\n", a, "N", "K=3", "K=5", "K=10");
    for (std::size_t n = 5; n <= 25; n += 5) {
      std::printf("%4zu", n);
      for (double k : {3.0, 5.0, 10.0}) std::printf(" %14.6g", tailmix::convexity_ratio({}, a, n, k));
      std::printf("\n");
    }
    std::printf("\n");
  }
}
