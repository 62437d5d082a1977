#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "coopdrive/core.hpp"

// Little-endian byte packing shared by the wire codec, episode files and
// parameter checkpoints. Layouts written through these helpers are fixed
// regardless of host endianness or struct padding.

namespace coopdrive {

class ByteWriter {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { append(v); }
    void u32(uint32_t v) { append(v); }
    void u64(uint64_t v) { append(v); }
    void i16(int16_t v) { append(static_cast<uint16_t>(v)); }
    void i32(int32_t v) { append(static_cast<uint32_t>(v)); }
    void i64(int64_t v) { append(static_cast<uint64_t>(v)); }

    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        append(bits);
    }

    void bytes(const void* data, size_t n) {
        const auto* p = static_cast<const uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }

    size_t size() const { return buf_.size(); }
    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

  private:
    template <typename T>
    void append(T v) {
        for (size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        }
    }

    std::vector<uint8_t> buf_;
};

class ByteReader {
  public:
    ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const std::vector<uint8_t>& buf) : data_(buf.data()), size_(buf.size()) {}

    uint8_t u8() { return static_cast<uint8_t>(take(1)); }
    uint16_t u16() { return static_cast<uint16_t>(take(2)); }
    uint32_t u32() { return static_cast<uint32_t>(take(4)); }
    uint64_t u64() { return take(8); }
    int16_t i16() { return static_cast<int16_t>(take(2)); }
    int32_t i32() { return static_cast<int32_t>(take(4)); }
    int64_t i64() { return static_cast<int64_t>(take(8)); }

    double f64() {
        uint64_t bits = take(8);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    size_t offset() const { return pos_; }
    size_t remaining() const { return size_ - pos_; }
    bool done() const { return pos_ == size_; }

    void require(size_t n, const char* what) const {
        if (size_ - pos_ < n) {
            throw DecodeError(std::string("truncated input while reading ") + what, pos_);
        }
    }

  private:
    uint64_t take(size_t n) {
        if (size_ - pos_ < n) throw DecodeError("truncated input", pos_);
        uint64_t v = 0;
        for (size_t i = 0; i < n; ++i) {
            v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        }
        pos_ += n;
        return v;
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

}  // namespace coopdrive
