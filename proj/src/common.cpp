// SPDX-License-Identifier: Apache-2.0
#include "otdr/common.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace otdr {
namespace {

int resolve_worker_count() {
  if (const char* env = std::getenv("OTDR_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Minimal persistent pool: one task at a time, static chunking.
class Pool {
 public:
  Pool() : workers_(static_cast<std::size_t>(resolve_worker_count() - 1)) {
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      workers_[i] = std::thread([this, i] { worker_loop(i + 1); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  void run(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
    const int nw = size();
    if (n <= 0) return;
    if (nw == 1 || n == 1) {
      body(0, n);
      return;
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      body_ = &body;
      total_ = n;
      pending_ = nw - 1;
      ++epoch_;
    }
    cv_.notify_all();
    run_chunk(0, n, nw);  // main thread takes chunk 0
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    body_ = nullptr;
  }

 private:
  void run_chunk(int w, std::int64_t n, int nw) {
    std::int64_t per = (n + nw - 1) / nw;
    std::int64_t lo = per * w;
    std::int64_t hi = lo + per < n ? lo + per : n;
    if (lo < hi) (*body_)(lo, hi);
  }

  void worker_loop(int id) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::int64_t, std::int64_t)>* body = nullptr;
      std::int64_t n = 0;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
        body = body_;
        n = total_;
      }
      if (body) {
        std::int64_t per = (n + size() - 1) / size();
        std::int64_t lo = per * id;
        std::int64_t hi = lo + per < n ? lo + per : n;
        if (lo < hi) (*body)(lo, hi);
      }
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::int64_t, std::int64_t)>* body_ = nullptr;
  std::int64_t total_ = 0;
  int pending_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
};

Pool& pool() {
  static Pool p;
  return p;
}

}  // namespace

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
  pool().run(n, body);
}

int worker_count() { return pool().size(); }

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace otdr
