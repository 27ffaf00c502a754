#ifndef PT__CLOCK_HPP_
#define PT__CLOCK_HPP_

#include <sys/syscall.h>
#include <time.h>
#include <unistd.h>

#include <cstdint>

namespace pt
{

/// Process-wide monotonic clock, nanoseconds. All trace timestamps come from here.
inline uint64_t monotonic_now_ns()
{
  timespec ts;
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<uint64_t>(ts.tv_sec) * 1000000000ull + static_cast<uint64_t>(ts.tv_nsec);
}

/// OS thread id truncated to 32 bits, cached per thread.
inline uint32_t current_thread_id()
{
  thread_local uint32_t tid = static_cast<uint32_t>(::syscall(SYS_gettid));
  return tid;
}

}  // namespace pt

#endif  // PT__CLOCK_HPP_
