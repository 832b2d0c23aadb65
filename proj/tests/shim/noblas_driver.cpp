// Linked against the preload library but no BLAS: the first dgemm_ call has
// nowhere to forward to.

#include <cstddef>
#include <cstdio>

extern "C" void dgemm_(const char*, const char*, const int*, const int*, const int*,
                       const double*, const double*, const int*, const double*, const int*,
                       const double*, double*, const int*, std::size_t, std::size_t);

int main() {
  const char n = 'N';
  const int one = 1;
  const double alpha = 1, beta = 0, a = 2, b = 3;
  double c = 0;
  dgemm_(&n, &n, &one, &one, &one, &alpha, &a, &one, &b, &one, &beta, &c, &one, 1, 1);
  std::printf("unreachable: %g\n", c);
  return 0;
}
