/** WebGL2 splat renderer: instanced quads, per-splat data textures, the
 *  same covariance projection / 3-sigma truncation / opacity cap as the
 *  CPU path, composited back-to-front with premultiplied alpha (equivalent
 *  to the front-to-back transmittance product). */

import { CameraIntrin, CameraPose } from "./types.js";
import { SplatSet, depthSort } from "./splats.js";
import { quatToMat3, quatNormalize } from "./mat.js";

const VERT = `#version 300 es
precision highp float;
precision highp sampler2D;

uniform sampler2D uGeom;   // 2 texels/splat: pos.xyz + opacity, cov3d(6)+pad
uniform sampler2D uCov2;   // second cov texel
uniform sampler2D uSh;     // 12 texels/splat: 48 SH coefficients
uniform int uTexWidth;
uniform mat3 uRot;         // world-to-camera
uniform vec3 uTrans;
uniform vec3 uCamCenter;
uniform vec4 uFocal;       // fx, fy, cx, cy
uniform vec2 uViewport;    // width, height

in vec2 aCorner;           // quad corner in [-1,1]^2
in uint aIndex;            // sorted splat id

out vec2 vOffset;          // pixel offset from the splat center
out vec3 vConic;
out vec4 vColor;           // premultiplied-ready rgb + alpha base

const float SH0 = 0.28209479177387814;
const float SH1 = 0.4886025119029199;

vec4 fetchTexel(sampler2D tex, uint index, int slot, int stride) {
  int flat_id = int(index) * stride + slot;
  ivec2 at = ivec2(flat_id % uTexWidth, flat_id / uTexWidth);
  return texelFetch(tex, at, 0);
}

void main() {
  uint id = aIndex;
  vec4 g0 = fetchTexel(uGeom, id, 0, 2);
  vec4 g1 = fetchTexel(uGeom, id, 1, 2);
  vec4 g2 = fetchTexel(uCov2, id, 0, 1);
  vec3 pos = g0.xyz;
  float opacity = g0.w;

  vec3 cam = uRot * pos + uTrans;
  if (cam.z < 0.01) { gl_Position = vec4(0.0, 0.0, 2.0, 1.0); return; }

  // Sigma_cam = W Sigma3 W^T (Sigma3 packed: xx xy xz yy yz zz)
  mat3 sigma3 = mat3(g1.x, g1.y, g1.z,
                     g1.y, g1.w, g2.x,
                     g1.z, g2.x, g2.y);
  mat3 sigmaCam = uRot * sigma3 * transpose(uRot);
  float z2 = cam.z * cam.z;
  vec2 j = uFocal.xy / cam.z;
  vec2 jz = -uFocal.xy * cam.xy / z2;
  float a = j.x * (j.x * sigmaCam[0][0] + jz.x * sigmaCam[2][0])
          + jz.x * (j.x * sigmaCam[0][2] + jz.x * sigmaCam[2][2]) + 0.3;
  float b = j.x * (j.y * sigmaCam[1][0] + jz.y * sigmaCam[2][0])
          + jz.x * (j.y * sigmaCam[1][2] + jz.y * sigmaCam[2][2]);
  float c = j.y * (j.y * sigmaCam[1][1] + jz.y * sigmaCam[2][1])
          + jz.y * (j.y * sigmaCam[1][2] + jz.y * sigmaCam[2][2]) + 0.3;
  float det = a * c - b * b;
  if (det <= 0.0) { gl_Position = vec4(0.0, 0.0, 2.0, 1.0); return; }
  vConic = vec3(c / det, -b / det, a / det);

  vec2 mean = uFocal.xy * cam.xy / cam.z + uFocal.zw;
  float mid = 0.5 * (a + c);
  float radius = 3.0 * sqrt(mid + sqrt(max(mid * mid - det, 0.0))) + 1.0;
  vOffset = aCorner * radius;
  vec2 screen = (mean + vOffset) / uViewport * 2.0 - 1.0;
  gl_Position = vec4(screen.x, -screen.y, 0.0, 1.0);

  // order-3 SH at the view direction
  vec3 dir = normalize(pos - uCamCenter);
  float x = dir.x, y = dir.y, z = dir.z;
  float xx = x * x, yy = y * y, zz = z * z;
  float basis[16];
  basis[0] = SH0;
  basis[1] = -SH1 * y; basis[2] = SH1 * z; basis[3] = -SH1 * x;
  basis[4] = 1.0925484305920792 * x * y;
  basis[5] = -1.0925484305920792 * y * z;
  basis[6] = 0.31539156525252005 * (2.0 * zz - xx - yy);
  basis[7] = -1.0925484305920792 * x * z;
  basis[8] = 0.5462742152960396 * (xx - yy);
  basis[9] = -0.5900435899266435 * y * (3.0 * xx - yy);
  basis[10] = 2.890611442640554 * x * y * z;
  basis[11] = -0.4570457994644658 * y * (4.0 * zz - xx - yy);
  basis[12] = 0.3731763325901154 * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  basis[13] = -0.4570457994644658 * x * (4.0 * zz - xx - yy);
  basis[14] = 1.445305721320277 * z * (xx - yy);
  basis[15] = -0.5900435899266435 * x * (xx - 3.0 * yy);
  // 48 floats = 12 texels; coefficient m lives at flat floats 3m..3m+2
  vec3 rgb = vec3(0.0);
  for (int m = 0; m < 16; m++) {
    int flat_idx = m * 3;
    vec4 t0 = fetchTexel(uSh, id, flat_idx / 4, 12);
    vec4 t1 = fetchTexel(uSh, id, (flat_idx + 1) / 4, 12);
    vec4 t2 = fetchTexel(uSh, id, (flat_idx + 2) / 4, 12);
    float cr = t0[flat_idx % 4];
    float cg = t1[(flat_idx + 1) % 4];
    float cb = t2[(flat_idx + 2) % 4];
    rgb += basis[m] * vec3(cr, cg, cb);
  }
  vColor = vec4(rgb, opacity);
}
`;

const FRAG = `#version 300 es
precision highp float;
in vec2 vOffset;
in vec3 vConic;
in vec4 vColor;
out vec4 outColor;

void main() {
  float q = vConic.x * vOffset.x * vOffset.x
          + 2.0 * vConic.y * vOffset.x * vOffset.y
          + vConic.z * vOffset.y * vOffset.y;
  if (q > 9.0) discard;
  float alpha = min(vColor.a * exp(-0.5 * q), 0.999);
  outColor = vec4(vColor.rgb * alpha, alpha);
}
`;

function compile(gl: WebGL2RenderingContext, type: number, src: string): WebGLShader {
  const shader = gl.createShader(type)!;
  gl.shaderSource(shader, src);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(gl.getShaderInfoLog(shader) ?? "shader compile failed");
  }
  return shader;
}

export class SplatRenderer {
  private gl: WebGL2RenderingContext;
  private program: WebGLProgram;
  private indexBuffer: WebGLBuffer;
  private count = 0;
  private texWidth = 1024;

  constructor(private canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl2", { antialias: false, alpha: false });
    if (!gl) throw new Error("WebGL2 required");
    this.gl = gl;
    const program = gl.createProgram()!;
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERT));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAG));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(program) ?? "link failed");
    }
    this.program = program;
    gl.useProgram(program);

    const quad = new Float32Array([-1, -1, 1, -1, -1, 1, 1, 1]);
    const quadBuf = gl.createBuffer()!;
    gl.bindBuffer(gl.ARRAY_BUFFER, quadBuf);
    gl.bufferData(gl.ARRAY_BUFFER, quad, gl.STATIC_DRAW);
    const cornerLoc = gl.getAttribLocation(program, "aCorner");
    gl.enableVertexAttribArray(cornerLoc);
    gl.vertexAttribPointer(cornerLoc, 2, gl.FLOAT, false, 0, 0);

    this.indexBuffer = gl.createBuffer()!;
    const indexLoc = gl.getAttribLocation(program, "aIndex");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.indexBuffer);
    gl.enableVertexAttribArray(indexLoc);
    gl.vertexAttribIPointer(indexLoc, 1, gl.UNSIGNED_INT, 0, 0);
    gl.vertexAttribDivisor(indexLoc, 1);

    gl.disable(gl.DEPTH_TEST);
    gl.enable(gl.BLEND);
    // premultiplied over-operator; draw order is back to front
    gl.blendFunc(gl.ONE, gl.ONE_MINUS_SRC_ALPHA);
  }

  private makeTexture(unit: number, name: string, data: Float32Array, texels: number): void {
    const gl = this.gl;
    const height = Math.ceil(texels / this.texWidth);
    const padded = new Float32Array(this.texWidth * height * 4);
    padded.set(data);
    const tex = gl.createTexture()!;
    gl.activeTexture(gl.TEXTURE0 + unit);
    gl.bindTexture(gl.TEXTURE_2D, tex);
    gl.texImage2D(gl.TEXTURE_2D, 0, gl.RGBA32F, this.texWidth, height, 0,
      gl.RGBA, gl.FLOAT, padded);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.NEAREST);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MAG_FILTER, gl.NEAREST);
    gl.uniform1i(gl.getUniformLocation(this.program, name), unit);
  }

  upload(s: SplatSet): void {
    const gl = this.gl;
    gl.useProgram(this.program);
    this.count = s.count;
    const geom = new Float32Array(s.count * 8);
    const cov2 = new Float32Array(s.count * 4);
    for (let i = 0; i < s.count; i++) {
      const q = quatNormalize([
        s.rotations[i * 4], s.rotations[i * 4 + 1],
        s.rotations[i * 4 + 2], s.rotations[i * 4 + 3],
      ]);
      const r = quatToMat3(q);
      const sx = s.scales[i * 3], sy = s.scales[i * 3 + 1], sz = s.scales[i * 3 + 2];
      // Sigma3 = R diag(s^2) R^T, packed upper triangle
      const m = [r[0] * sx, r[1] * sy, r[2] * sz,
        r[3] * sx, r[4] * sy, r[5] * sz,
        r[6] * sx, r[7] * sy, r[8] * sz];
      const xx = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
      const xy = m[0] * m[3] + m[1] * m[4] + m[2] * m[5];
      const xz = m[0] * m[6] + m[1] * m[7] + m[2] * m[8];
      const yy = m[3] * m[3] + m[4] * m[4] + m[5] * m[5];
      const yz = m[3] * m[6] + m[4] * m[7] + m[5] * m[8];
      const zz = m[6] * m[6] + m[7] * m[7] + m[8] * m[8];
      geom.set([s.positions[i * 3], s.positions[i * 3 + 1], s.positions[i * 3 + 2],
        s.opacities[i], xx, xy, xz, yy], i * 8);
      cov2.set([yz, zz, 0, 0], i * 4);
    }
    this.makeTexture(0, "uGeom", geom, s.count * 2);
    this.makeTexture(1, "uCov2", cov2, s.count);
    this.makeTexture(2, "uSh", s.sh, s.count * 12);
  }

  draw(s: SplatSet, intr: CameraIntrin, pose: CameraPose): void {
    const gl = this.gl;
    gl.useProgram(this.program);
    this.canvas.width = intr.width;
    this.canvas.height = intr.height;
    gl.viewport(0, 0, intr.width, intr.height);
    const rot = quatToMat3(quatNormalize(pose.rotation));
    const order = depthSort(s.positions, s.count, rot, pose.translation);
    order.reverse(); // back to front for the over-operator
    gl.bindBuffer(gl.ARRAY_BUFFER, this.indexBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, order, gl.DYNAMIC_DRAW);

    // column-major upload of the row-major matrix = transpose flag emulation
    const colMajor = new Float32Array([
      rot[0], rot[3], rot[6], rot[1], rot[4], rot[7], rot[2], rot[5], rot[8],
    ]);
    gl.uniformMatrix3fv(gl.getUniformLocation(this.program, "uRot"), false, colMajor);
    gl.uniform3fv(gl.getUniformLocation(this.program, "uTrans"), pose.translation);
    const cx = -(rot[0] * pose.translation[0] + rot[3] * pose.translation[1] + rot[6] * pose.translation[2]);
    const cy = -(rot[1] * pose.translation[0] + rot[4] * pose.translation[1] + rot[7] * pose.translation[2]);
    const cz = -(rot[2] * pose.translation[0] + rot[5] * pose.translation[1] + rot[8] * pose.translation[2]);
    gl.uniform3f(gl.getUniformLocation(this.program, "uCamCenter"), cx, cy, cz);
    gl.uniform4f(gl.getUniformLocation(this.program, "uFocal"), intr.fx, intr.fy, intr.cx, intr.cy);
    gl.uniform2f(gl.getUniformLocation(this.program, "uViewport"), intr.width, intr.height);
    gl.uniform1i(gl.getUniformLocation(this.program, "uTexWidth"), this.texWidth);

    gl.clearColor(0, 0, 0, 1);
    gl.clear(gl.COLOR_BUFFER_BIT);
    gl.drawArraysInstanced(gl.TRIANGLE_STRIP, 0, 4, this.count);
  }
}
