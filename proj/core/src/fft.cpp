#include "pfpp/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace pfpp {

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
    static std::mutex planner_mutex; // FFTW planning is not thread-safe
    const int n = static_cast<int>(data.size());
    if (n <= 1) return;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        plan = fftw_plan_dft_1d(n, buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& z : data) z *= scale;
    }
}

} // namespace pfpp
