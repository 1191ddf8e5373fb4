#include "dnsaml/crypto.hpp"

#include "dnsaml/wire.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <memory>
#include <stdexcept>

namespace dnsaml::crypto
{

void ensure_initialized()
{
  static const int rc = sodium_init();
  if (rc < 0)
    throw std::runtime_error("libsodium initialisation failed");
}

namespace
{

std::string digest_hex(const EVP_MD *md, std::span<const std::uint8_t> data)
{
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out, &len) != 1)
    throw std::runtime_error("digest computation failed");
  return wire::to_hex(std::span<const std::uint8_t>(out, len));
}

} // namespace

std::string md5_hex(std::span<const std::uint8_t> data) { return digest_hex(EVP_md5(), data); }

std::string sha1_hex(std::span<const std::uint8_t> data) { return digest_hex(EVP_sha1(), data); }

SigningKeyPair SigningKeyPair::from_seed(const Seed &seed)
{
  ensure_initialized();
  SigningKeyPair kp;
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  return kp;
}

SigningKeyPair SigningKeyPair::derive(std::uint64_t seed, std::string_view purpose)
{
  std::array<std::uint8_t, 8> material{};
  for (int i = 0; i < 8; ++i)
    material[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  AeadKey k = derive_key(material, purpose);
  Seed s{};
  std::copy(k.begin(), k.end(), s.begin());
  return from_seed(s);
}

Signature sign_detached(const SecretKey &key, std::span<const std::uint8_t> message)
{
  ensure_initialized();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
  return sig;
}

bool verify_detached(const PublicKey &key, const Signature &sig,
                     std::span<const std::uint8_t> message)
{
  ensure_initialized();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

AeadKey derive_key(std::span<const std::uint8_t> material, std::string_view context)
{
  ensure_initialized();
  AeadKey out{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char *>(context.data()),
                            context.size());
  const unsigned char sep = 0;
  crypto_generichash_update(&st, &sep, 1);
  crypto_generichash_update(&st, material.data(), material.size());
  crypto_generichash_final(&st, out.data(), out.size());
  return out;
}

Bytes aead_seal(const AeadKey &key, const AeadNonce &nonce, std::span<const std::uint8_t> plain,
                std::span<const std::uint8_t> associated)
{
  ensure_initialized();
  Bytes out(plain.size() + kAeadTagSize);
  unsigned long long len = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(out.data(), &len, plain.data(), plain.size(),
                                             associated.data(), associated.size(), nullptr,
                                             nonce.data(), key.data());
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::optional<Bytes> aead_open(const AeadKey &key, const AeadNonce &nonce,
                               std::span<const std::uint8_t> cipher,
                               std::span<const std::uint8_t> associated)
{
  ensure_initialized();
  if (cipher.size() < kAeadTagSize)
    return std::nullopt;
  Bytes out(cipher.size() - kAeadTagSize);
  unsigned long long len = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(out.data(), &len, nullptr, cipher.data(),
                                                 cipher.size(), associated.data(),
                                                 associated.size(), nonce.data(), key.data()) != 0)
    return std::nullopt;
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> data)
{
  ensure_initialized();
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(data.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), variant);
  out.resize(out.size() - 1); // trailing NUL
  return out;
}

std::optional<Bytes> base64_decode(std::string_view text)
{
  ensure_initialized();
  Bytes out(text.size());
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    return std::nullopt;
  out.resize(len);
  return out;
}

} // namespace dnsaml::crypto
