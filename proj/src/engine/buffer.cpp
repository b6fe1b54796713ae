#include "occakit/engine/buffer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "occakit/engine/errors.hpp"
#include "state.hpp"

namespace occakit::engine {

static_assert(std::endian::native == std::endian::little,
              "buffer export assumes a little-endian host");

std::string_view to_string(ElemType t) {
  switch (t) {
    case ElemType::Int32: return "i32";
    case ElemType::Float32: return "f32";
    case ElemType::Float64: return "f64";
  }
  return "?";
}

std::size_t element_size(ElemType t) {
  switch (t) {
    case ElemType::Int32: return 4;
    case ElemType::Float32: return 4;
    case ElemType::Float64: return 8;
  }
  return 0;
}

namespace {

detail::BufferSlot& live(const std::shared_ptr<detail::BufferSlot>& slot) {
  if (!slot) throw Error("operation on an empty buffer handle");
  return *slot;
}

void require_idle(const detail::BufferSlot& slot) {
  if (slot.in_use.load(std::memory_order_acquire) > 0) {
    throw Error("buffer is in use by a running kernel");
  }
}

void require_type(const detail::BufferSlot& slot, ElemType want) {
  if (slot.storage->type != want) {
    throw Error("buffer holds " + std::string(to_string(slot.storage->type)) + ", not " +
                std::string(to_string(want)));
  }
}

}  // namespace

ElemType Buffer::type() const { return live(slot_).storage->type; }

std::size_t Buffer::size() const { return live(slot_).storage->length; }

template <BufferElement T>
std::vector<T> Buffer::read() const {
  auto& slot = live(slot_);
  require_idle(slot);
  require_type(slot, elem_type_of<T>);
  const auto& st = *slot.storage;
  std::vector<T> out(st.length);
  std::memcpy(out.data(), st.data(), st.length * sizeof(T));
  return out;
}

template <BufferElement T>
void Buffer::write(std::span<const T> data) {
  auto& slot = live(slot_);
  require_idle(slot);
  require_type(slot, elem_type_of<T>);
  auto& st = *slot.storage;
  if (data.size() != st.length) {
    throw Error("write of " + std::to_string(data.size()) + " elements into a buffer of length " +
                std::to_string(st.length));
  }
  std::memcpy(st.data(), data.data(), st.length * sizeof(T));
}

template std::vector<std::int32_t> Buffer::read<std::int32_t>() const;
template std::vector<float> Buffer::read<float>() const;
template std::vector<double> Buffer::read<double>() const;
template void Buffer::write<std::int32_t>(std::span<const std::int32_t>);
template void Buffer::write<float>(std::span<const float>);
template void Buffer::write<double>(std::span<const double>);

void Buffer::swap(Buffer& other) {
  auto& a = live(slot_);
  auto& b = live(other.slot_);
  if (&a == &b) return;
  require_idle(a);
  require_idle(b);
  if (a.device != b.device) throw Error("cannot swap buffers owned by different devices");
  if (a.storage->type != b.storage->type) {
    throw Error("cannot swap " + std::string(to_string(a.storage->type)) + " and " +
                std::string(to_string(b.storage->type)) + " buffers");
  }
  if (a.storage->length != b.storage->length) {
    throw Error("cannot swap buffers of lengths " + std::to_string(a.storage->length) + " and " +
                std::to_string(b.storage->length));
  }
  a.storage.swap(b.storage);
}

std::vector<unsigned char> Buffer::to_bytes() const {
  auto& slot = live(slot_);
  require_idle(slot);
  const auto& st = *slot.storage;
  std::vector<unsigned char> out(st.length * element_size(st.type));
  std::memcpy(out.data(), st.data(), out.size());
  return out;
}

double Buffer::abs_sum() const {
  auto& slot = live(slot_);
  require_idle(slot);
  const auto& st = *slot.storage;
  double sum = 0.0;
  switch (st.type) {
    case ElemType::Int32: {
      const auto* p = static_cast<const std::int32_t*>(st.data());
      for (std::size_t i = 0; i < st.length; ++i) sum += std::fabs(static_cast<double>(p[i]));
      break;
    }
    case ElemType::Float32: {
      const auto* p = static_cast<const float*>(st.data());
      for (std::size_t i = 0; i < st.length; ++i) sum += std::fabs(static_cast<double>(p[i]));
      break;
    }
    case ElemType::Float64: {
      const auto* p = static_cast<const double*>(st.data());
      for (std::size_t i = 0; i < st.length; ++i) sum += std::fabs(p[i]);
      break;
    }
  }
  return sum;
}

}  // namespace occakit::engine
