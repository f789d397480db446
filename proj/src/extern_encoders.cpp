#include "afford/extern_encoders.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace afford {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    check(pos_ + n <= bytes_.size(), "[extern_encoders] truncated response");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_text_request(const std::vector<std::string>& class_names,
                                const Tensor& context) {
  check(!class_names.empty(), "[encode_text_request] no class names");
  std::string out = "ATXQ";
  put_u32(out, 1);
  const std::uint32_t p = context.numel() == 0 ? 0 : static_cast<std::uint32_t>(context.rows());
  const std::uint32_t d_e =
      context.numel() == 0 ? 0 : static_cast<std::uint32_t>(context.cols());
  put_u32(out, p);
  put_u32(out, d_e);
  for (std::size_t i = 0; i < context.numel(); ++i)
    put_f32(out, static_cast<float>(context[i]));
  put_u32(out, static_cast<std::uint32_t>(class_names.size()));
  for (const auto& name : class_names) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
  }
  return out;
}

Tensor parse_text_response(const std::string& bytes) {
  Reader r(bytes);
  check(r.str(4) == "ATXR", "[parse_text_response] bad magic");
  const std::uint32_t rows = r.u32();
  const std::uint32_t d_t = r.u32();
  check(rows > 0 && d_t > 0, "[parse_text_response] empty feature block");
  Tensor out(rows, d_t);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = static_cast<double>(r.f32());
  check(r.exhausted(), "[parse_text_response] trailing bytes");
  check(out.all_finite(), "[parse_text_response] non-finite feature");
  return out;
}

std::string encode_image_request(const ImageTensor& image,
                                 const std::vector<std::uint32_t>& layer_indices) {
  check(image.pixels.numel() == image.height * image.width * 3,
        "[encode_image_request] malformed image");
  std::string out = "AIMQ";
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(image.height));
  put_u32(out, static_cast<std::uint32_t>(image.width));
  put_u32(out, static_cast<std::uint32_t>(layer_indices.size()));
  for (std::uint32_t idx : layer_indices) put_u32(out, idx);
  for (std::size_t i = 0; i < image.pixels.numel(); ++i)
    put_f32(out, static_cast<float>(image.pixels[i]));
  return out;
}

PatchFeatureMap parse_image_response(const std::string& bytes) {
  Reader r(bytes);
  check(r.str(4) == "AIMR", "[parse_image_response] bad magic");
  const std::uint32_t layers = r.u32();
  const std::uint32_t gh = r.u32();
  const std::uint32_t gw = r.u32();
  const std::uint32_t d_v = r.u32();
  check(layers > 0 && gh > 0 && gw > 0 && d_v > 0, "[parse_image_response] empty header");
  PatchFeatureMap out;
  out.grid_h = gh;
  out.grid_w = gw;
  for (std::uint32_t l = 0; l < layers; ++l) {
    Tensor grid(static_cast<std::size_t>(gh) * gw, d_v);
    for (std::size_t i = 0; i < grid.numel(); ++i) grid[i] = static_cast<double>(r.f32());
    out.layer_stack.push_back(std::move(grid));
  }
  out.cls = Tensor(1, d_v);
  for (std::size_t i = 0; i < d_v; ++i) out.cls[i] = static_cast<double>(r.f32());
  check(r.exhausted(), "[parse_image_response] trailing bytes");
  return out;
}

std::string run_subprocess(const std::string& command, const std::string& input) {
  int in_pipe[2], out_pipe[2];
  check(pipe(in_pipe) == 0 && pipe(out_pipe) == 0, "[run_subprocess] pipe failed");

  const pid_t pid = fork();
  check(pid >= 0, "[run_subprocess] fork failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);

  std::size_t written = 0;
  while (written < input.size()) {
    const ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
    if (n < 0 && errno == EINTR) continue;
    check(n > 0, "[run_subprocess] write to helper failed");
    written += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);

  std::string output;
  char buf[4096];
  for (;;) {
    const ssize_t n = read(out_pipe[0], buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    check(n >= 0, "[run_subprocess] read from helper failed");
    if (n == 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);

  int status = 0;
  check(waitpid(pid, &status, 0) == pid, "[run_subprocess] waitpid failed");
  check(WIFEXITED(status) && WEXITSTATUS(status) == 0,
        "[run_subprocess] helper exited with failure: " + command);
  return output;
}

Tensor external_text_features(const std::string& command,
                              const std::vector<std::string>& class_names,
                              const Tensor& context) {
  const std::string response =
      run_subprocess(command, encode_text_request(class_names, context));
  Tensor rows = parse_text_response(response);
  check(rows.rows() == class_names.size(),
        "[external_text_features] row count does not match the class list");
  return rows;
}

PatchFeatureMap external_encode_image(const std::string& command, const ImageTensor& image,
                                      const std::vector<std::uint32_t>& layer_indices) {
  const std::string response =
      run_subprocess(command, encode_image_request(image, layer_indices));
  return parse_image_response(response);
}

}  // namespace afford
