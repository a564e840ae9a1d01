#include "wander/embed_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <fcntl.h>
#include <cstring>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"
#include "wander/errors.hpp"
#include "wander/text.hpp"

namespace wander {

EmbeddingStore EmbeddingStore::bind(const std::vector<Document>& corpus) const {
  EmbeddingStore bound;
  bound.dim = dim;
  bound.doc_word_vectors = doc_word_vectors;
  bound.sem_word_vectors = sem_word_vectors;
  bound.doc_vectors = VectorTable(dim);
  for (const auto& doc : corpus) {
    const auto row = doc_vectors.find(doc.id);
    if (!row) throw MissingDocVector(doc.id);
    bound.doc_vectors.add(doc.id, *row);
  }
  return bound;
}

EmbeddingStore make_store(VectorTable doc, VectorTable word, VectorTable sem) {
  const std::size_t dim = doc.dim();
  if (word.dim() != dim) throw DimensionMismatch(dim, word.dim());
  if (sem.dim() != dim) throw DimensionMismatch(dim, sem.dim());
  return EmbeddingStore{dim, std::move(doc), std::move(word), std::move(sem)};
}

EmbeddingStore load_store(const std::filesystem::path& doc_path, const std::filesystem::path& word_path,
                          const std::filesystem::path& sem_path) {
  return make_store(read_vector_file(doc_path), read_vector_file(word_path), read_vector_file(sem_path));
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& doc_path,
                 const std::filesystem::path& word_path, const std::filesystem::path& sem_path) {
  write_vector_file(doc_path, store.doc_vectors);
  write_vector_file(word_path, store.doc_word_vectors);
  write_vector_file(sem_path, store.sem_word_vectors);
}

// ---------------------------------------------------------------------------
// Line-protocol subprocess

struct LineProtocolEmbedder::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;
  std::string command;

  void write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("write to embedder failed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    for (;;) {
      if (const auto nl = buffer.find('\n'); nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(from_child, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("read from embedder failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) fail("embedder closed its output");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }

  int reap() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    to_child = from_child = -1;
    int status = 0;
    if (pid > 0) {
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      pid = -1;
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  }

  [[noreturn]] void fail(const std::string& why) {
    const int code = reap();
    throw EmbedderFailure(why + " (command \"" + command + "\", exit status " + std::to_string(code) + ")");
  }
};

LineProtocolEmbedder::LineProtocolEmbedder(const std::string& command) : proc_(std::make_unique<Process>()) {
  proc_->command = command;
  // A dead child must surface as EPIPE, not kill the caller.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw EmbedderFailure("pipe() failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw EmbedderFailure("pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw EmbedderFailure("fork() failed");
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  proc_->pid = pid;
  proc_->to_child = in_pipe[1];
  proc_->from_child = out_pipe[0];
}

LineProtocolEmbedder::~LineProtocolEmbedder() {
  if (proc_) proc_->reap();
}

std::vector<float> LineProtocolEmbedder::embed(std::string_view text) {
  if (proc_->pid < 0) throw EmbedderFailure("embedder process is no longer running");
  const nlohmann::json request = {{"text", std::string(text)}};
  proc_->write_all(request.dump() + "\n");
  const std::string line = proc_->read_line();

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    proc_->fail("embedder replied with invalid JSON");
  }
  if (reply.contains("error")) proc_->fail("embedder reported error " + reply["error"].dump());
  const auto vec = reply.find("vector");
  if (vec == reply.end() || !vec->is_array() || vec->empty()) proc_->fail("embedder reply lacks \"vector\"");
  std::vector<float> out;
  out.reserve(vec->size());
  for (const auto& v : *vec) {
    if (!v.is_number()) proc_->fail("embedder vector has a non-numeric entry");
    const float f = v.get<float>();
    if (!std::isfinite(f)) proc_->fail("embedder vector has a non-finite entry");
    out.push_back(f);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> mean_of_tokens(const VectorTable& table, std::size_t dim, std::string_view text) {
  std::vector<double> sum(dim, 0.0);
  std::size_t known = 0;
  for (const auto& token : tokenize(text)) {
    const auto row = table.find(token);
    if (!row) continue;
    for (std::size_t i = 0; i < dim; ++i) sum[i] += (*row)[i];
    ++known;
  }
  if (known == 0) throw NoKnownTokens(std::string(text));
  for (auto& v : sum) v /= static_cast<double>(known);
  return sum;
}

std::vector<double> external_vector(TextEmbedder& embedder, std::size_t dim, std::string_view text) {
  const auto raw = embedder.embed(text);
  if (raw.size() != dim) throw DimensionMismatch(dim, raw.size());
  return {raw.begin(), raw.end()};
}

}  // namespace

std::vector<double> embed_query(const EmbeddingStore& store, std::string_view query, TextEmbedder* external) {
  if (external) return external_vector(*external, store.dim, query);
  return mean_of_tokens(store.doc_word_vectors, store.dim, query);
}

std::vector<double> embed_semantic(const EmbeddingStore& store, std::string_view text, TextEmbedder* external) {
  if (external) return external_vector(*external, store.dim, text);
  return mean_of_tokens(store.sem_word_vectors, store.dim, text);
}

double dot(std::span<const float> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(b.size(), a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

namespace {

template <typename A>
double cosine_impl(std::span<const A> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    ab += x * b[i];
    aa += x * x;
    bb += b[i] * b[i];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na < 1e-12 || nb < 1e-12) throw ZeroNorm();
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }
double cosine(std::span<const float> a, std::span<const double> b) { return cosine_impl(a, b); }

}  // namespace wander
