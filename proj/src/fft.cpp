#include "bds/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bds {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_forward(cd* data, int n, int stride) {
  if (!is_power_of_two(n)) throw std::invalid_argument("fft size must be a power of two");
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / len;
    const cd wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        cd u = data[(i + k) * stride];
        cd v = data[(i + k + len / 2) * stride] * w;
        data[(i + k) * stride] = u + v;
        data[(i + k + len / 2) * stride] = u - v;
        w *= wlen;
      }
    }
  }
}

void fft2_forward(std::vector<cd>& grid, int n) {
  if (static_cast<int>(grid.size()) != n * n)
    throw std::invalid_argument("fft2: grid size mismatch");
  for (int row = 0; row < n; ++row) fft_forward(grid.data() + row * n, n, 1);
  for (int col = 0; col < n; ++col) fft_forward(grid.data() + col, n, n);
}

}  // namespace bds
