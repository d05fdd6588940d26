#pragma once

#include <continuum/tensor/tensor.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace continuum {

// Named-weight archive: a JSON manifest (architecture metadata + tensor
// shapes) followed by raw float32 blobs in manifest order.
class WeightArchive {
 public:
  nlohmann::json meta;

  void put(const std::string& name, const ad::Shape& shape, const std::vector<float>& data) {
    entries_.push_back({name, shape, data});
  }

  template <typename S>
  void put(const std::string& name, const ad::Tensor<S>& t) {
    std::vector<float> d(t.data().begin(), t.data().end());
    entries_.push_back({name, t.shape(), std::move(d)});
  }

  bool has(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return true;
    return false;
  }

  template <typename S>
  ad::Tensor<S> get(const std::string& name, bool requires_grad = false) const {
    for (const auto& e : entries_) {
      if (e.name == name) {
        std::vector<S> d(e.data.begin(), e.data.end());
        return ad::Tensor<S>::from(e.shape, std::move(d), requires_grad);
      }
    }
    throw std::runtime_error("archive has no tensor named " + name);
  }

  void save(const std::string& path) const {
    nlohmann::json manifest;
    manifest["format"] = "continuum-weights-v1";
    manifest["meta"] = meta;
    auto& list = manifest["tensors"] = nlohmann::json::array();
    for (const auto& e : entries_) {
      list.push_back({{"name", e.name}, {"shape", e.shape}});
    }
    std::string header = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const char magic[4] = {'C', 'W', 'A', '1'};
    out.write(magic, 4);
    uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& e : entries_)
      out.write(reinterpret_cast<const char*>(e.data.data()),
                static_cast<std::streamsize>(e.data.size() * sizeof(float)));
  }

  static WeightArchive load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::string(magic, 4) != "CWA1") throw std::runtime_error("bad archive magic in " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    nlohmann::json manifest = nlohmann::json::parse(header);
    WeightArchive ar;
    ar.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& t : manifest["tensors"]) {
      Entry e;
      e.name = t["name"].get<std::string>();
      e.shape = t["shape"].get<ad::Shape>();
      e.data.resize(ad::numel(e.shape));
      in.read(reinterpret_cast<char*>(e.data.data()),
              static_cast<std::streamsize>(e.data.size() * sizeof(float)));
      ar.entries_.push_back(std::move(e));
    }
    if (!in) throw std::runtime_error("truncated archive " + path);
    return ar;
  }

 private:
  struct Entry {
    std::string name;
    ad::Shape shape;
    std::vector<float> data;
  };
  std::vector<Entry> entries_;
};

}  // namespace continuum
