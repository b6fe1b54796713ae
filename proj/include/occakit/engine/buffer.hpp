#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

namespace occakit::engine {

enum class ElemType { Int32, Float32, Float64 };

std::string_view to_string(ElemType t);
std::size_t element_size(ElemType t);

template <class T>
inline constexpr ElemType elem_type_of = std::is_same_v<T, std::int32_t> ? ElemType::Int32
                                         : std::is_same_v<T, float>      ? ElemType::Float32
                                                                         : ElemType::Float64;

template <class T>
concept BufferElement =
    std::is_same_v<T, std::int32_t> || std::is_same_v<T, float> || std::is_same_v<T, double>;

namespace detail {
struct BufferSlot;
}

// Handle to device memory. Copies of a handle alias the same buffer; swap()
// exchanges the storage behind two buffers so every alias sees the change.
class Buffer {
 public:
  Buffer() = default;

  explicit operator bool() const { return slot_ != nullptr; }
  ElemType type() const;
  std::size_t size() const;

  // Snapshot of the contents. T must match type().
  template <BufferElement T>
  std::vector<T> read() const;

  // data.size() must equal size(); T must match type().
  template <BufferElement T>
  void write(std::span<const T> data);
  template <BufferElement T>
  void write(const std::vector<T>& data) {
    write(std::span<const T>(data));
  }

  // O(1); both buffers must share element type, length and device.
  void swap(Buffer& other);

  // Contents as a flat little-endian byte array.
  std::vector<unsigned char> to_bytes() const;

  // Sum of absolute values, accumulated in index order as double.
  double abs_sum() const;

  friend bool operator==(const Buffer& a, const Buffer& b) { return a.slot_ == b.slot_; }

 private:
  friend class Device;
  friend class Kernel;
  explicit Buffer(std::shared_ptr<detail::BufferSlot> slot) : slot_(std::move(slot)) {}

  std::shared_ptr<detail::BufferSlot> slot_;
};

inline void swap(Buffer& a, Buffer& b) { a.swap(b); }

}  // namespace occakit::engine
