#ifndef BDS_FFT_HPP
#define BDS_FFT_HPP

#include <complex>
#include <vector>

namespace bds {

using cd = std::complex<double>;

// In-place radix-2 FFT with the e^{-2*pi*i*k*n/N} kernel (forward sign).
// n must be a power of two.  No scaling is applied.
void fft_forward(cd* data, int n, int stride = 1);

// 2-D forward transform of a row-major n x n grid, in place, no scaling.
void fft2_forward(std::vector<cd>& grid, int n);

bool is_power_of_two(int n);

}  // namespace bds

#endif
