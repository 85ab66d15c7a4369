#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "common.hpp"
#include "tilesim/apps/oracle.hpp"

namespace tilesim::apps {

namespace {

using cd = std::complex<double>;
constexpr std::uint32_t kPut = 1;

// In-place iterative radix-2 FFT. Returns the butterfly count.
std::uint64_t fft_inplace(std::vector<cd>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  std::uint64_t butterflies = 0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd w = std::polar(1.0, -2.0 * std::numbers::pi * double(k) / double(len));
        const cd u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        ++butterflies;
      }
  }
  return butterflies;
}

// n^3 complex tensor on an n x n grid. Tile p = a*n + b holds one pencil; three
// kernels transform z, y and x in turn, with an all-to-all transpose after the
// first two.
class Fft3dApp : public Application {
 public:
  explicit Fft3dApp(const AppOptions& o) : opts_(o) {}

  std::string name() const override { return "fft3d"; }
  std::uint32_t max_task_id() const override { return kPut; }

  void setup(const SimSetup& s) override {
    if (s.grid.width != s.grid.height) throw ConfigError("fft3d needs a square tile grid");
    n_ = s.grid.width;
    if (opts_.fft_n != 0 && opts_.fft_n != n_)
      throw ConfigError("fft3d with n=" + std::to_string(opts_.fft_n) + " needs a " + std::to_string(opts_.fft_n) +
                        "x" + std::to_string(opts_.fft_n) + " grid");
    if (n_ < 2 || (n_ & (n_ - 1)) != 0) throw ConfigError("fft3d needs a power-of-two grid width");
    layout_ = s.layout;
    const std::size_t total = std::size_t{n_} * n_ * n_;
    input_.resize(total);
    for (std::size_t i = 0; i < total; ++i)
      input_[i] = cd(dense_value(opts_.seed, 2 * i) - 1.0, dense_value(opts_.seed, 2 * i + 1) - 1.0);
    for (auto& b : buf_) b.assign(total, cd{});
    buf_[0] = input_;  // [x][y][z]: pencil (x, y) lives on tile x*n + y
    const Partition part = Partition::block(total, s.tiles);
    for (std::uint32_t i = 0; i < 3; ++i) arr_[i] = s.layout->add("pencil" + std::to_string(i), part, 8);
    phase_.assign(s.tiles, 0);
    sent_.assign(s.tiles, 0);
  }

  std::vector<KernelSpec> kernels() override {
    std::vector<KernelSpec> ks;
    for (std::uint32_t stage = 0; stage < 3; ++stage) {
      KernelSpec k;
      k.name = std::string("fft_") + "zyx"[stage];
      k.init = [this, stage](TaskContext& ctx) { return transform(ctx, stage); };
      k.init_max_emit = opts_.chunk;
      if (stage < 2) {
        k.init_targets = {kPut};
        TaskDescriptor put;
        put.id = kPut;
        put.name = "put";
        put.payload_bits = 96;  // slot index plus FP32 real and imaginary parts
        put.body = [this, stage](TaskContext& ctx, const Args& a) {
          const std::size_t idx = std::size_t{ctx.tile()} * n_ + a[0];
          buf_[stage + 1][idx] = cd(dval(a[1]), dval(a[2]));
          ctx.compute(2);
          ctx.store(layout_->address(arr_[stage + 1], idx), 64);
        };
        k.tasks.push_back(std::move(put));
      }
      ks.push_back(std::move(k));
    }
    return ks;
  }

  CheckResult check() const override {
    // Stage-three pencil (ky, kz) holds index kx; reorder to [kx][ky][kz].
    std::vector<cd> got(buf_[2].size());
    for (std::uint32_t ky = 0; ky < n_; ++ky)
      for (std::uint32_t kz = 0; kz < n_; ++kz)
        for (std::uint32_t kx = 0; kx < n_; ++kx)
          got[(std::size_t{kx} * n_ + ky) * n_ + kz] = buf_[2][(std::size_t{ky} * n_ + kz) * n_ + kx];
    return compare_out(got, oracle_dft3d(input_, n_), "fft3d spectrum");
  }

  RunWork work() const override {
    const double total = double(n_) * n_ * n_;
    return {total, 5.0 * total * std::log2(total), "elements"};
  }

 private:
  // Stage 0 transforms along z on pencil (x, y) and sends (x, y, kz) to tile
  // x*n + kz slot y. Stage 1 transforms along y on pencil (x, kz) and sends
  // (x, ky, kz) to tile ky*n + kz slot x. Stage 2 transforms along x.
  bool transform(TaskContext& ctx, std::uint32_t stage) {
    const std::uint32_t t = ctx.tile();
    const std::size_t base = std::size_t{t} * n_;
    auto& buf = buf_[stage];
    if (phase_[t] != stage + 1) {
      std::vector<cd> line(buf.begin() + base, buf.begin() + base + n_);
      for (std::uint32_t i = 0; i < n_; ++i) ctx.load(layout_->address(arr_[stage], base + i), 64);
      const std::uint64_t bf = fft_inplace(line);
      // A butterfly is one complex multiply and two complex adds.
      ctx.compute(static_cast<std::uint32_t>(2 * bf), static_cast<std::uint32_t>(10 * bf), static_cast<std::uint32_t>(bf));
      ctx.add_flops(10 * bf);
      std::copy(line.begin(), line.end(), buf.begin() + base);
      for (std::uint32_t i = 0; i < n_; ++i) ctx.store(layout_->address(arr_[stage], base + i), 64);
      phase_[t] = stage + 1;
      sent_[t] = 0;
    }
    if (stage == 2) return true;
    const std::uint32_t a = t / n_, b = t % n_;
    for (std::uint32_t k = 0; k < opts_.chunk; ++k) {
      if (sent_[t] == n_) return true;
      const std::uint32_t i = sent_[t]++;
      const cd v = buf[base + i];
      ctx.load(layout_->address(arr_[stage], base + i), 64);
      ctx.compute(3);
      // stage 0: (a, b) = (x, y), i = kz; stage 1: (a, b) = (x, kz), i = ky
      const std::uint32_t dest = stage == 0 ? a * n_ + i : i * n_ + b;
      const std::uint32_t slot = stage == 0 ? b : a;
      ctx.send(kPut, dest, {slot, dbits(v.real()), dbits(v.imag()), 0});
    }
    return sent_[t] == n_;
  }

  AppOptions opts_;
  std::uint32_t n_ = 0;
  const DataLayout* layout_ = nullptr;
  std::vector<cd> input_;
  std::array<std::vector<cd>, 3> buf_;
  std::array<std::uint32_t, 3> arr_{};
  std::vector<std::uint32_t> phase_;
  std::vector<std::uint32_t> sent_;
};

}  // namespace

std::unique_ptr<Application> make_fft3d(const AppOptions& o) { return std::make_unique<Fft3dApp>(o); }

}  // namespace tilesim::apps
