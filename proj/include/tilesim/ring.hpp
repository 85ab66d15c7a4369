#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace tilesim {

// Fixed-capacity circular FIFO. Storage is allocated once at construction.
template <typename T>
class Ring {
 public:
  Ring() = default;
  explicit Ring(std::size_t capacity) : slots_(capacity) {}

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return size_; }
  std::size_t free() const { return slots_.size() - size_; }
  bool empty() const { return size_ == 0; }
  bool full() const { return size_ == slots_.size(); }

  T& front() {
    assert(size_ > 0);
    return slots_[head_];
  }
  const T& front() const {
    assert(size_ > 0);
    return slots_[head_];
  }
  T& operator[](std::size_t i) { return slots_[wrap(head_ + i)]; }
  const T& operator[](std::size_t i) const { return slots_[wrap(head_ + i)]; }

  void push_back(const T& v) {
    assert(!full());
    slots_[wrap(head_ + size_)] = v;
    ++size_;
  }
  void push_front(const T& v) {
    assert(!full());
    head_ = wrap(head_ + slots_.size() - 1);
    slots_[head_] = v;
    ++size_;
  }
  T pop_front() {
    assert(size_ > 0);
    T v = slots_[head_];
    head_ = wrap(head_ + 1);
    --size_;
    return v;
  }
  void clear() {
    head_ = 0;
    size_ = 0;
  }

 private:
  // i < 2 * capacity everywhere it is called
  std::size_t wrap(std::size_t i) const { return i >= slots_.size() ? i - slots_.size() : i; }

  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace tilesim
