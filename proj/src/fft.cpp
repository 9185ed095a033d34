#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace crystal::detail {

namespace {
std::mutex planner_mutex;
}

void dft(std::vector<std::complex<double>>& data, int d, std::int64_t n, int sign) {
    std::vector<int> dims(d, static_cast<int>(n));
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        plan = fftw_plan_dft(d, dims.data(), ptr, ptr, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                             FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(plan);
}

}  // namespace crystal::detail
